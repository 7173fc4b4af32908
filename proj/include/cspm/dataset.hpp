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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cspm/channel.hpp"
#include "cspm/errors.hpp"
#include "cspm/modulation.hpp"
#include "cspm/rng.hpp"
#include "cspm/signal.hpp"

namespace cspm {

struct LabeledExample {
  ComplexSequence signal;
  std::uint32_t label = 0;
  float snr_db = 0.0f;

  bool operator==(const LabeledExample&) const = default;
};

struct Dataset {
  std::vector<LabeledExample> examples;
  std::vector<std::string> class_names;
  std::size_t length = 0;
  std::vector<float> snr_grid;  // ascending

  std::size_t size() const noexcept { return examples.size(); }
  std::size_t num_classes() const noexcept { return class_names.size(); }

  void validate() const {
    if (class_names.empty()) throw ConfigError("dataset has no classes");
    if (length == 0) throw ShapeError("dataset sample length must be positive");
    for (std::size_t k = 0; k < examples.size(); ++k) {
      const auto& ex = examples[k];
      if (ex.signal.size() != length || ex.signal.q.size() != length) {
        throw ShapeError("example " + std::to_string(k) + " has length " + std::to_string(ex.signal.size()) +
                         ", expected " + std::to_string(length));
      }
      if (ex.label >= class_names.size()) {
        throw ConfigError("example " + std::to_string(k) + " label out of range");
      }
      if (!std::binary_search(snr_grid.begin(), snr_grid.end(), ex.snr_db)) {
        throw ConfigError("example " + std::to_string(k) + " SNR is not on the grid");
      }
    }
  }

  bool operator==(const Dataset&) const = default;
};

// Sorted unique SNR values present in the examples.
inline std::vector<float> snr_values(const std::vector<LabeledExample>& examples) {
  std::vector<float> grid;
  grid.reserve(examples.size());
  for (const auto& ex : examples) grid.push_back(ex.snr_db);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

// Parses "start:step:stop" (inclusive) or a single value.
inline std::vector<double> parse_snr_grid(const std::string& text) {
  std::vector<double> parts;
  std::size_t pos = 0;
  try {
    while (true) {
      const auto colon = text.find(':', pos);
      const std::string piece = text.substr(pos, colon == std::string::npos ? std::string::npos : colon - pos);
      std::size_t used = 0;
      parts.push_back(std::stod(piece, &used));
      if (used != piece.size()) throw UsageError("bad number '" + piece + "'");
      if (colon == std::string::npos) break;
      pos = colon + 1;
    }
  } catch (const std::logic_error&) {
    throw UsageError("cannot parse SNR grid '" + text + "'");
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3) throw UsageError("SNR grid must be start:step:stop");
  const double start = parts[0], step = parts[1], stop = parts[2];
  if (step <= 0.0 || stop < start) throw UsageError("SNR grid needs step > 0 and stop >= start");
  std::vector<double> grid;
  const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long k = 0; k <= count; ++k) grid.push_back(start + static_cast<double>(k) * step);
  return grid;
}

struct GenerationConfig {
  std::vector<Modulation> classes;
  std::vector<double> snr_grid;
  std::size_t per_cell = 0;
  std::size_t length = 128;
  int samples_per_symbol = 8;
  std::uint64_t seed = 42;
  // Per-example impairments, drawn uniformly.
  bool random_phase = true;
  double max_carrier_offset = 0.002;  // cycles/sample
  double max_timing_offset = 0.01;    // |ratio - 1|

  void validate() const {
    if (classes.empty()) throw ConfigError("class list is empty");
    if (snr_grid.empty()) throw ConfigError("SNR grid is empty");
    if (per_cell == 0) throw ConfigError("per-cell count must be positive");
    if (length == 0) throw ConfigError("sample length must be positive");
    for (double s : snr_grid) {
      if (!std::isfinite(s)) throw ConfigError("dataset SNR values must be finite");
    }
    if (max_timing_offset < 0.0 || max_timing_offset > 0.1) throw ConfigError("timing offset must be in [0, 0.1]");
  }
};

inline LabeledExample synthesize_example(const GenerationConfig& cfg, std::size_t class_index, std::size_t snr_index,
                                         std::size_t item) {
  const std::uint64_t seed = derive_seed(cfg.seed, {class_index, snr_index, item});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto clean = modulate(cfg.classes[class_index], cfg.length, rng(), cfg.samples_per_symbol);
  ChannelConfig ch;
  ch.snr_db = cfg.snr_grid[snr_index];
  ch.phase_offset = cfg.random_phase ? 2.0 * std::numbers::pi * unit(rng) : 0.0;
  ch.carrier_freq_offset = cfg.max_carrier_offset * (2.0 * unit(rng) - 1.0);
  ch.timing_resample_ratio = 1.0 + cfg.max_timing_offset * (2.0 * unit(rng) - 1.0);
  ch.seed = rng();
  LabeledExample ex;
  ex.signal = apply_channel(clean, ch);
  ex.label = static_cast<std::uint32_t>(class_index);
  ex.snr_db = static_cast<float>(cfg.snr_grid[snr_index]);
  return ex;
}

// Examples are ordered class-major, then SNR, then item; each one draws from
// its own stream keyed by (seed, class, snr, item).
inline Dataset synthesize_dataset(const GenerationConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.length = cfg.length;
  for (auto m : cfg.classes) ds.class_names.emplace_back(modulation_name(m));
  for (double s : cfg.snr_grid) ds.snr_grid.push_back(static_cast<float>(s));
  std::sort(ds.snr_grid.begin(), ds.snr_grid.end());
  ds.snr_grid.erase(std::unique(ds.snr_grid.begin(), ds.snr_grid.end()), ds.snr_grid.end());
  ds.examples.reserve(cfg.classes.size() * cfg.snr_grid.size() * cfg.per_cell);
  for (std::size_t c = 0; c < cfg.classes.size(); ++c) {
    for (std::size_t s = 0; s < cfg.snr_grid.size(); ++s) {
      for (std::size_t k = 0; k < cfg.per_cell; ++k) ds.examples.push_back(synthesize_example(cfg, c, s, k));
    }
  }
  return ds;
}

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Stratified split: every (label, SNR) cell is shuffled with its own stream
// and cut into floor(train*n), floor(val*n) and the remainder.
inline SplitIndices split_indices(const Dataset& ds, const SplitRatios& r, std::uint64_t seed) {
  if (r.train < 0 || r.val < 0 || r.test < 0 || std::abs(r.train + r.val + r.test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be non-negative and sum to 1");
  }
  std::map<std::pair<std::uint32_t, float>, std::vector<std::size_t>> cells;
  for (std::size_t k = 0; k < ds.examples.size(); ++k) {
    cells[{ds.examples[k].label, ds.examples[k].snr_db}].push_back(k);
  }
  SplitIndices out;
  for (auto& [key, idx] : cells) {
    const auto n = idx.size();
    const auto n_train = static_cast<std::size_t>(std::floor(r.train * static_cast<double>(n) + 1e-9));
    const auto n_val = static_cast<std::size_t>(std::floor(r.val * static_cast<double>(n) + 1e-9));
    if (n_train + n_val >= n) {
      throw ConfigError("cell (label " + std::to_string(key.first) + ", SNR " + std::to_string(key.second) +
                        ") has " + std::to_string(n) + " examples, too few for a test partition");
    }
    std::uint64_t snr_bits = 0;
    std::memcpy(&snr_bits, &key.second, sizeof(float));
    std::mt19937_64 rng(derive_seed(seed, {key.first, snr_bits}));
    std::shuffle(idx.begin(), idx.end(), rng);
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<long>(n_train));
    out.val.insert(out.val.end(), idx.begin() + static_cast<long>(n_train),
                   idx.begin() + static_cast<long>(n_train + n_val));
    out.test.insert(out.test.end(), idx.begin() + static_cast<long>(n_train + n_val), idx.end());
  }
  return out;
}

inline Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out;
  out.class_names = ds.class_names;
  out.length = ds.length;
  out.snr_grid = ds.snr_grid;
  out.examples.reserve(indices.size());
  for (auto k : indices) out.examples.push_back(ds.examples.at(k));
  return out;
}

inline std::array<Dataset, 3> split_dataset(const Dataset& ds, const SplitRatios& r, std::uint64_t seed) {
  const auto idx = split_indices(ds, r, seed);
  return {subset(ds, idx.train), subset(ds, idx.val), subset(ds, idx.test)};
}

}  // namespace cspm
