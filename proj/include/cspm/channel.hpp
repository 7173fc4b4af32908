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
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "cspm/errors.hpp"
#include "cspm/signal.hpp"

namespace cspm {

// Reserved SNR value meaning "no noise". Never written to a container.
inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

struct ChannelConfig {
  double snr_db = kNoiseless;
  double carrier_freq_offset = 0.0;  // cycles/sample
  double phase_offset = 0.0;         // radians
  double timing_resample_ratio = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(timing_resample_ratio >= 0.9 && timing_resample_ratio <= 1.1)) {
      throw ConfigError("timing_resample_ratio must lie in [0.9, 1.1]");
    }
    if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
      throw ConfigError("snr_db must be finite or +inf");
    }
    if (!std::isfinite(carrier_freq_offset) || !std::isfinite(phase_offset)) {
      throw ConfigError("channel offsets must be finite");
    }
  }
};

// Noise variance per complex sample for a unit-power signal.
inline double noise_variance(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

namespace detail {

// Linear-interpolation resampler about the window center; reads past either
// end hold the edge sample.
inline std::vector<std::complex<double>> resample_centered(const std::vector<std::complex<double>>& x, double ratio) {
  const auto len = x.size();
  std::vector<std::complex<double>> y(len);
  const double center = (static_cast<double>(len) - 1.0) / 2.0;
  for (std::size_t n = 0; n < len; ++n) {
    double src = center + (static_cast<double>(n) - center) * ratio;
    src = std::clamp(src, 0.0, static_cast<double>(len - 1));
    const auto lo = static_cast<std::size_t>(std::floor(src));
    const std::size_t hi = std::min(lo + 1, len - 1);
    const double frac = src - static_cast<double>(lo);
    y[n] = x[lo] * (1.0 - frac) + x[hi] * frac;
  }
  return y;
}

}  // namespace detail

// Applies timing resample, phase rotation, carrier spin and complex AWGN, in
// that order. The input is expected to have unit mean power.
inline ComplexSequence apply_channel(const ComplexSequence& x, const ChannelConfig& cfg) {
  cfg.validate();
  x.validate();
  auto s = to_complex(x);
  if (cfg.timing_resample_ratio != 1.0) s = detail::resample_centered(s, cfg.timing_resample_ratio);
  if (cfg.phase_offset != 0.0 || cfg.carrier_freq_offset != 0.0) {
    for (std::size_t n = 0; n < s.size(); ++n) {
      const double angle = cfg.phase_offset + 2.0 * std::numbers::pi * cfg.carrier_freq_offset * static_cast<double>(n);
      s[n] *= std::polar(1.0, angle);
    }
  }
  if (std::isfinite(cfg.snr_db)) {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise_variance(cfg.snr_db) / 2.0));
    for (auto& v : s) {
      const double ni = gauss(rng);
      const double nq = gauss(rng);
      v += std::complex<double>(ni, nq);
    }
  }
  return to_sequence(s);
}

}  // namespace cspm
