/* Copyright 2026 The CSPM Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>

namespace cspm {

// Process exit codes shared by the CLI and CI scripts.
enum class ExitCode : int { ok = 0, usage = 2, config = 3, numeric = 4 };

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::config; }
};

class UsageError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::usage; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Raised when an operation needs state that was never produced, e.g.
// backward() without a preceding forward().
class StateError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::numeric; }
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public ParseError {
 public:
  using ParseError::ParseError;
};

class VersionError : public ParseError {
 public:
  using ParseError::ParseError;
};

class TruncatedError : public ParseError {
 public:
  using ParseError::ParseError;
};

class ChecksumError : public ParseError {
 public:
  using ParseError::ParseError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cspm
