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

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

namespace cspm {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A named model tensor. Buffers (batch-norm running statistics) are saved
// with the model but are never optimized or counted as parameters.
template <typename Scalar>
struct Param {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  bool trainable = true;
  bool buffer = false;

  Param() = default;
  Param(std::string n, Eigen::Index rows, Eigen::Index cols, bool is_trainable = true, bool is_buffer = false)
      : name(std::move(n)),
        value(Matrix<Scalar>::Zero(rows, cols)),
        grad(Matrix<Scalar>::Zero(rows, cols)),
        trainable(is_trainable),
        buffer(is_buffer) {}

  Eigen::Index size() const { return value.size(); }
  bool optimized() const { return trainable && !buffer; }
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

// Planar batch of complex inputs: row b holds example b.
template <typename Scalar>
struct SignalBatch {
  Matrix<Scalar> real;  // B x T
  Matrix<Scalar> imag;  // B x T

  Eigen::Index batch() const { return real.rows(); }
  Eigen::Index length() const { return real.cols(); }
};

}  // namespace cspm
