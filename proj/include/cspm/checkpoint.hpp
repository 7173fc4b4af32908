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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cspm/container.hpp"
#include "cspm/errors.hpp"
#include "cspm/model.hpp"
#include "json.hpp"

namespace cspm {

// Checkpoint layout, little-endian:
//   "CSPK" | u32 version | u64 FNV-1a checksum of everything after it
//   u32 config length | config JSON (UTF-8)
//   u32 tensor count
//   per tensor: u32 name length | name | u32 rows | u32 cols |
//               u8 flags (1 = trainable, 2 = buffer) | rows*cols f32, row-major
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'C', 'S', 'P', 'K'};

inline std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (std::size_t k = 0; k < n; ++k) {
    h ^= data[k];
    h *= 0x100000001B3ull;
  }
  return h;
}

template <typename Scalar>
std::vector<std::uint8_t> encode_checkpoint(const Model<Scalar>& model) {
  detail::ByteWriter body;
  const std::string cfg = nlohmann::json(model.config()).dump();
  body.put_u32(static_cast<std::uint32_t>(cfg.size()));
  body.put_bytes(cfg.data(), cfg.size());
  const auto params = model.params();
  body.put_u32(static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    body.put_u32(static_cast<std::uint32_t>(p->name.size()));
    body.put_bytes(p->name.data(), p->name.size());
    body.put_u32(static_cast<std::uint32_t>(p->value.rows()));
    body.put_u32(static_cast<std::uint32_t>(p->value.cols()));
    body.put_u8(static_cast<std::uint8_t>((p->trainable ? 1 : 0) | (p->buffer ? 2 : 0)));
    for (Eigen::Index k = 0; k < p->value.size(); ++k) body.put_f32(static_cast<float>(p->value.data()[k]));
  }
  detail::ByteWriter out;
  out.put_bytes(kCheckpointMagic, 4);
  out.put_u32(kCheckpointVersion);
  out.put_u64(fnv1a64(body.bytes().data(), body.bytes().size()));
  out.put_bytes(body.bytes().data(), body.bytes().size());
  return std::move(out.bytes());
}

inline ModelConfig decode_checkpoint_config(detail::ByteReader& r) {
  const auto len = r.u32();
  std::string text(len, '\0');
  r.bytes(text.data(), len);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  return j.get<ModelConfig>();
}

// Rebuilds a model from checkpoint bytes. When `expected` is given, any
// difference from the stored configuration is rejected.
template <typename Scalar>
Model<Scalar> decode_checkpoint(const std::vector<std::uint8_t>& bytes,
                                const std::optional<ModelConfig>& expected = std::nullopt) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw BadMagicError("not a CSPM checkpoint (bad magic bytes)");
  }
  detail::ByteReader head(bytes.data(), bytes.size(), "checkpoint");
  char magic[4];
  head.bytes(magic, 4);
  const auto version = head.u32();
  if (version != kCheckpointVersion) throw VersionError("unsupported checkpoint version " + std::to_string(version));
  const auto checksum = head.u64();
  const std::size_t body_start = head.position();
  if (fnv1a64(bytes.data() + body_start, bytes.size() - body_start) != checksum) {
    throw ChecksumError("checkpoint checksum mismatch (file is truncated or corrupted)");
  }
  detail::ByteReader r(bytes.data() + body_start, bytes.size() - body_start, "checkpoint");
  const ModelConfig cfg = decode_checkpoint_config(r);
  if (expected && !(*expected == cfg)) {
    throw ConfigError("checkpoint configuration does not match the requested configuration");
  }
  Model<Scalar> model(cfg);
  auto params = model.params();
  const auto count = r.u32();
  if (count != params.size()) throw ConfigError("checkpoint tensor count does not match its configuration");
  for (auto* p : params) {
    const auto name_len = r.u32();
    std::string name(name_len, '\0');
    r.bytes(name.data(), name_len);
    const auto rows = r.u32();
    const auto cols = r.u32();
    const auto flags = r.u8();
    if (name != p->name || rows != p->value.rows() || cols != p->value.cols()) {
      throw ConfigError("checkpoint tensor '" + name + "' does not match the model layout");
    }
    if (((flags & 1) != 0) != p->trainable || ((flags & 2) != 0) != p->buffer) {
      throw ConfigError("checkpoint tensor '" + name + "' has unexpected flags");
    }
    for (Eigen::Index k = 0; k < p->value.size(); ++k) p->value.data()[k] = static_cast<Scalar>(r.f32());
  }
  if (r.remaining() != 0) throw ParseError("trailing bytes after the last checkpoint tensor");
  return model;
}

template <typename Scalar>
void save_checkpoint(const Model<Scalar>& model, const std::filesystem::path& path) {
  detail::write_file_atomic(path, encode_checkpoint(model));
}

template <typename Scalar>
Model<Scalar> load_checkpoint(const std::filesystem::path& path,
                              const std::optional<ModelConfig>& expected = std::nullopt) {
  return decode_checkpoint<Scalar>(detail::read_file(path), expected);
}

inline ModelConfig read_checkpoint_config(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw BadMagicError("not a CSPM checkpoint (bad magic bytes)");
  }
  detail::ByteReader r(bytes.data() + 16, bytes.size() - 16, "checkpoint");
  return decode_checkpoint_config(r);
}

}  // namespace cspm
