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

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "cspm/dataset.hpp"
#include "cspm/errors.hpp"

namespace cspm {

// CSPM dataset container, little-endian, no padding:
//   "CSPM" | u32 version | u32 C | u32 T | u32 N
//   C null-terminated UTF-8 class names
//   N x [u32 label | f32 snr_db | T x f32 I | T x f32 Q]
inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr char kContainerMagic[4] = {'C', 'S', 'P', 'M'};

namespace detail {

class ByteWriter {
 public:
  void put_u8(std::uint8_t v) { bytes_.push_back(v); }
  void put_u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void put_u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void put_f32(float v) { put_u32(std::bit_cast<std::uint32_t>(v)); }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  void put_cstring(const std::string& s) {
    put_bytes(s.data(), s.size());
    put_u8(0);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size, std::string what)
      : data_(data), size_(size), what_(std::move(what)) {}

  std::size_t remaining() const { return size_ - pos_; }
  std::size_t position() const { return pos_; }

  void need(std::size_t n) const {
    if (remaining() < n) {
      throw TruncatedError(what_ + ": truncated at byte " + std::to_string(pos_) + " (needed " + std::to_string(n) +
                           ", have " + std::to_string(remaining()) + ")");
    }
  }
  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * k);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  void bytes(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, data_ + pos_, n);
    pos_ += n;
  }
  std::string cstring() {
    std::string s;
    while (true) {
      const auto c = u8();
      if (c == 0) break;
      s.push_back(static_cast<char>(c));
    }
    return s;
  }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string what_;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Writes to a sibling temporary and renames, so readers never observe a
// half-written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_container(const Dataset& ds) {
  ds.validate();
  for (const auto& name : ds.class_names) {
    if (name.find('\0') != std::string::npos) throw ConfigError("class name contains a NUL byte");
  }
  detail::ByteWriter w;
  w.put_bytes(kContainerMagic, 4);
  w.put_u32(kContainerVersion);
  w.put_u32(static_cast<std::uint32_t>(ds.num_classes()));
  w.put_u32(static_cast<std::uint32_t>(ds.length));
  w.put_u32(static_cast<std::uint32_t>(ds.size()));
  for (const auto& name : ds.class_names) w.put_cstring(name);
  for (const auto& ex : ds.examples) {
    w.put_u32(ex.label);
    w.put_f32(ex.snr_db);
    for (float v : ex.signal.i) w.put_f32(v);
    for (float v : ex.signal.q) w.put_f32(v);
  }
  return std::move(w.bytes());
}

inline Dataset decode_container(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes.data(), bytes.size(), "CSPM container");
  char magic[4] = {};
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kContainerMagic, 4) != 0) {
    throw BadMagicError("not a CSPM container (bad magic bytes)");
  }
  r.bytes(magic, 4);
  const auto version = r.u32();
  if (version != kContainerVersion) {
    throw VersionError("unsupported container version " + std::to_string(version));
  }
  Dataset ds;
  const auto classes = r.u32();
  ds.length = r.u32();
  const auto count = r.u32();
  if (ds.length == 0) throw ParseError("container declares T = 0");
  for (std::uint32_t c = 0; c < classes; ++c) ds.class_names.push_back(r.cstring());
  const std::size_t record = 8 + 8 * ds.length;
  r.need(record * count);
  ds.examples.resize(count);
  for (auto& ex : ds.examples) {
    ex.label = r.u32();
    ex.snr_db = r.f32();
    if (ex.label >= classes) throw ParseError("record label out of range");
    ex.signal = ComplexSequence(ds.length);
    for (auto& v : ex.signal.i) v = r.f32();
    for (auto& v : ex.signal.q) v = r.f32();
  }
  if (r.remaining() != 0) throw ParseError("trailing bytes after the last record");
  ds.snr_grid = snr_values(ds.examples);
  return ds;
}

inline void write_container(const Dataset& ds, const std::filesystem::path& path) {
  detail::write_file_atomic(path, encode_container(ds));
}

inline Dataset read_container(const std::filesystem::path& path) { return decode_container(detail::read_file(path)); }

}  // namespace cspm
