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

#include <cctype>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cspm/errors.hpp"
#include "cspm/signal.hpp"

namespace cspm {

enum class Modulation : int {
  bpsk = 0,
  qpsk,
  psk8,
  pam4,
  qam16,
  qam64,
  gfsk,
  cpfsk,
  wbfm,
  am_dsb,
  am_ssb,
};

inline constexpr std::array<std::string_view, 11> kModulationNames = {
    "BPSK", "QPSK", "8PSK", "PAM4", "QAM16", "QAM64",
    "GFSK", "CPFSK", "WBFM", "AM-DSB", "AM-SSB"};

inline constexpr int kModulationCount = static_cast<int>(kModulationNames.size());

inline std::string_view modulation_name(Modulation m) {
  return kModulationNames[static_cast<std::size_t>(m)];
}

inline Modulation modulation_from_id(int id) {
  if (id < 0 || id >= kModulationCount) {
    throw ConfigError("unknown modulation id " + std::to_string(id));
  }
  return static_cast<Modulation>(id);
}

// Case-insensitive.
inline Modulation parse_modulation(std::string_view name) {
  const auto same = [](std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
             return std::toupper(static_cast<unsigned char>(x)) == std::toupper(static_cast<unsigned char>(y));
           });
  };
  for (int k = 0; k < kModulationCount; ++k) {
    if (same(kModulationNames[static_cast<std::size_t>(k)], name)) return static_cast<Modulation>(k);
  }
  throw ConfigError("unknown modulation '" + std::string(name) + "'");
}

inline bool is_linear_digital(Modulation m) {
  switch (m) {
    case Modulation::bpsk:
    case Modulation::qpsk:
    case Modulation::psk8:
    case Modulation::pam4:
    case Modulation::qam16:
    case Modulation::qam64:
      return true;
    default:
      return false;
  }
}

inline bool is_digital(Modulation m) {
  return is_linear_digital(m) || m == Modulation::gfsk || m == Modulation::cpfsk;
}

inline int bits_per_symbol(Modulation m) {
  switch (m) {
    case Modulation::bpsk: return 1;
    case Modulation::qpsk: return 2;
    case Modulation::psk8: return 3;
    case Modulation::pam4: return 2;
    case Modulation::qam16: return 4;
    case Modulation::qam64: return 6;
    case Modulation::gfsk:
    case Modulation::cpfsk: return 1;
    default: return 0;
  }
}

enum class PulseShape { rectangular, root_raised_cosine };

struct ModulationDefaults {
  static constexpr double rrc_rolloff = 0.35;
  static constexpr int rrc_span = 8;
  static constexpr double gaussian_bt = 0.35;
  static constexpr int gaussian_span = 4;
  static constexpr double fsk_index = 0.5;
  static constexpr double fm_deviation = 0.1;   // cycles/sample per unit message
  static constexpr double am_depth = 0.5;
  static constexpr double message_band_lo = 0.05;
  static constexpr double message_band_hi = 0.15;
};

inline std::vector<int> draw_bits(std::uint64_t seed, std::size_t count) {
  std::mt19937_64 rng(seed);
  std::vector<int> bits(count);
  for (auto& b : bits) b = static_cast<int>((rng() >> 32) & 1u);
  return bits;
}

namespace detail {

inline unsigned gray_decode(unsigned g) {
  for (unsigned shift = 1; shift < 32; shift <<= 1) g ^= g >> shift;
  return g;
}

inline unsigned pack_bits(std::span<const int> bits) {
  unsigned v = 0;
  for (int b : bits) v = (v << 1) | static_cast<unsigned>(b & 1);
  return v;
}

// Gray-coded M-PAM level in {-(M-1), ..., M-1}.
inline double pam_level(std::span<const int> bits) {
  const unsigned m = 1u << bits.size();
  const unsigned k = gray_decode(pack_bits(bits));
  return 2.0 * static_cast<double>(k) - static_cast<double>(m - 1);
}

inline double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

inline double hamming(std::size_t n, std::size_t len) {
  if (len == 1) return 1.0;
  return 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                static_cast<double>(len - 1));
}

template <typename T>
std::vector<T> convolve_full(const std::vector<T>& x, const std::vector<double>& h) {
  std::vector<T> y(x.size() + h.size() - 1, T{});
  for (std::size_t n = 0; n < x.size(); ++n) {
    for (std::size_t k = 0; k < h.size(); ++k) y[n + k] += x[n] * h[k];
  }
  return y;
}

}  // namespace detail

// Unit-average-energy Gray constellation point for one symbol's worth of bits.
inline std::complex<double> map_bits(Modulation m, std::span<const int> bits) {
  if (static_cast<int>(bits.size()) != bits_per_symbol(m) || !is_linear_digital(m)) {
    throw ConfigError("bit group does not match modulation " + std::string(modulation_name(m)));
  }
  using std::numbers::sqrt2;
  switch (m) {
    case Modulation::bpsk:
      return {bits[0] ? -1.0 : 1.0, 0.0};
    case Modulation::qpsk:
      return {(bits[0] ? -1.0 : 1.0) / sqrt2, (bits[1] ? -1.0 : 1.0) / sqrt2};
    case Modulation::psk8: {
      const double k = detail::gray_decode(detail::pack_bits(bits));
      return std::polar(1.0, 2.0 * std::numbers::pi * k / 8.0);
    }
    case Modulation::pam4:
      return {detail::pam_level(bits) / std::sqrt(5.0), 0.0};
    case Modulation::qam16:
      return {detail::pam_level(bits.subspan(0, 2)) / std::sqrt(10.0),
              detail::pam_level(bits.subspan(2, 2)) / std::sqrt(10.0)};
    case Modulation::qam64:
      return {detail::pam_level(bits.subspan(0, 3)) / std::sqrt(42.0),
              detail::pam_level(bits.subspan(3, 3)) / std::sqrt(42.0)};
    default:
      break;
  }
  throw ConfigError("not a linear modulation");
}

inline std::vector<std::complex<double>> map_symbols(Modulation m, std::span<const int> bits) {
  const auto bps = static_cast<std::size_t>(bits_per_symbol(m));
  std::vector<std::complex<double>> out;
  out.reserve(bits.size() / bps);
  for (std::size_t k = 0; k + bps <= bits.size(); k += bps) out.push_back(map_bits(m, bits.subspan(k, bps)));
  return out;
}

// Root-raised-cosine taps spanning `span` symbols, unit energy.
inline std::vector<double> rrc_taps(double rolloff, int span, int sps) {
  const int len = span * sps + 1;
  const double half = static_cast<double>(len - 1) / 2.0;
  std::vector<double> h(static_cast<std::size_t>(len));
  const double pi = std::numbers::pi;
  double energy = 0.0;
  for (int n = 0; n < len; ++n) {
    const double t = (n - half) / sps;
    double v;
    if (std::abs(t) < 1e-12) {
      v = 1.0 - rolloff + 4.0 * rolloff / pi;
    } else if (rolloff > 0.0 && std::abs(std::abs(t) - 1.0 / (4.0 * rolloff)) < 1e-9) {
      v = rolloff / std::numbers::sqrt2 *
          ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * rolloff)) +
           (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * rolloff)));
    } else {
      const double num = std::sin(pi * t * (1.0 - rolloff)) + 4.0 * rolloff * t * std::cos(pi * t * (1.0 + rolloff));
      const double den = pi * t * (1.0 - (4.0 * rolloff * t) * (4.0 * rolloff * t));
      v = num / den;
    }
    h[static_cast<std::size_t>(n)] = v;
    energy += v * v;
  }
  for (auto& v : h) v /= std::sqrt(energy);
  return h;
}

// Gaussian frequency-pulse filter for GFSK, unit DC gain.
inline std::vector<double> gaussian_taps(double bt, int span, int sps) {
  const int len = span * sps + 1;
  const double half = static_cast<double>(len - 1) / 2.0;
  const double pi = std::numbers::pi;
  std::vector<double> h(static_cast<std::size_t>(len));
  double sum = 0.0;
  for (int n = 0; n < len; ++n) {
    const double t = (n - half) / sps;
    const double v = std::exp(-2.0 * pi * pi * bt * bt * t * t / std::log(2.0));
    h[static_cast<std::size_t>(n)] = v;
    sum += v;
  }
  for (auto& v : h) v /= sum;
  return h;
}

inline std::vector<double> lowpass_taps(double cutoff, std::size_t len) {
  std::vector<double> h(len);
  const double mid = static_cast<double>(len - 1) / 2.0;
  double sum = 0.0;
  for (std::size_t n = 0; n < len; ++n) {
    h[n] = 2.0 * cutoff * detail::sinc(2.0 * cutoff * (static_cast<double>(n) - mid)) * detail::hamming(n, len);
    sum += h[n];
  }
  for (auto& v : h) v /= sum;
  return h;
}

inline std::vector<double> hilbert_taps(std::size_t len) {
  std::vector<double> h(len, 0.0);
  const auto mid = static_cast<long>(len / 2);
  for (std::size_t n = 0; n < len; ++n) {
    const long k = static_cast<long>(n) - mid;
    if (k % 2 != 0) h[n] = 2.0 / (std::numbers::pi * static_cast<double>(k)) * detail::hamming(n, len);
  }
  return h;
}

// Places each symbol on an sps-sample grid and applies the pulse. The
// rectangular pulse holds each symbol for sps samples; the RRC output is the
// full convolution, including filter transients at both ends.
inline std::vector<std::complex<double>> shape_symbols(std::span<const std::complex<double>> symbols, int sps,
                                                       PulseShape pulse) {
  if (sps < 1) throw ConfigError("samples per symbol must be positive");
  const auto step = static_cast<std::size_t>(sps);
  if (pulse == PulseShape::rectangular) {
    std::vector<std::complex<double>> out(symbols.size() * step);
    for (std::size_t k = 0; k < symbols.size(); ++k) {
      for (std::size_t r = 0; r < step; ++r) out[k * step + r] = symbols[k];
    }
    return out;
  }
  std::vector<std::complex<double>> up(symbols.size() * step, {0.0, 0.0});
  for (std::size_t k = 0; k < symbols.size(); ++k) up[k * step] = symbols[k];
  return detail::convolve_full(up, rrc_taps(ModulationDefaults::rrc_rolloff, ModulationDefaults::rrc_span, sps));
}

inline void normalize_power(std::vector<std::complex<double>>& x) {
  double p = 0.0;
  for (const auto& v : x) p += std::norm(v);
  p /= static_cast<double>(x.size());
  if (p <= 0.0) throw NumericError("cannot normalize a zero-power sequence");
  const double g = 1.0 / std::sqrt(p);
  for (auto& v : x) v *= g;
}

namespace detail {

// Band-limited Gaussian message with unit standard deviation.
inline std::vector<double> analog_message(std::mt19937_64& rng, std::size_t length) {
  std::uniform_real_distribution<double> band(ModulationDefaults::message_band_lo, ModulationDefaults::message_band_hi);
  const double cutoff = band(rng);
  const auto taps = lowpass_taps(cutoff, 65);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> white(length + taps.size() - 1);
  for (auto& v : white) v = gauss(rng);
  auto filtered = convolve_full(white, taps);
  std::vector<double> m(filtered.begin() + static_cast<long>(taps.size() - 1),
                        filtered.begin() + static_cast<long>(taps.size() - 1 + length));
  double mean = 0.0, var = 0.0;
  for (double v : m) mean += v;
  mean /= static_cast<double>(length);
  for (double v : m) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(length));
  for (auto& v : m) v = (v - mean) / sd;
  return m;
}

inline std::vector<std::complex<double>> fsk(std::span<const int> bits, std::size_t length, int sps, bool gaussian) {
  std::vector<double> freq(bits.size() * static_cast<std::size_t>(sps));
  for (std::size_t k = 0; k < freq.size(); ++k) freq[k] = bits[k / static_cast<std::size_t>(sps)] ? -1.0 : 1.0;
  std::size_t offset = 0;
  if (gaussian) {
    const auto g = gaussian_taps(ModulationDefaults::gaussian_bt, ModulationDefaults::gaussian_span, sps);
    freq = convolve_full(freq, g);
    offset = g.size() - 1;
  }
  std::vector<std::complex<double>> out(length);
  double phase = 0.0;
  const double k = std::numbers::pi * ModulationDefaults::fsk_index / sps;
  for (std::size_t n = 0; n < offset + length; ++n) {
    phase += k * freq[n];
    if (n >= offset) out[n - offset] = std::polar(1.0, phase);
  }
  return out;
}

}  // namespace detail

// Noise-free baseband waveform of the given modulation, normalized to unit
// mean power over the returned window.
inline ComplexSequence modulate(Modulation m, std::size_t length, std::uint64_t seed, int sps = 8,
                                PulseShape pulse = PulseShape::root_raised_cosine) {
  if (length == 0) throw ConfigError("sequence length must be positive");
  if (is_digital(m) && sps < 2) throw ConfigError("digital modulations need at least 2 samples per symbol");
  const auto step = static_cast<std::size_t>(std::max(sps, 1));
  const std::size_t symbols_needed = (length + step - 1) / step;

  std::vector<std::complex<double>> x;
  if (is_linear_digital(m)) {
    const auto bps = static_cast<std::size_t>(bits_per_symbol(m));
    if (pulse == PulseShape::rectangular) {
      const auto symbols = map_symbols(m, draw_bits(seed, symbols_needed * bps));
      x = shape_symbols(symbols, sps, pulse);
      x.resize(length);
    } else {
      const auto span = static_cast<std::size_t>(ModulationDefaults::rrc_span);
      const auto symbols = map_symbols(m, draw_bits(seed, (symbols_needed + span + 1) * bps));
      const auto shaped = shape_symbols(symbols, sps, pulse);
      const std::size_t start = span * step;  // past the leading transient
      x.assign(shaped.begin() + static_cast<long>(start), shaped.begin() + static_cast<long>(start + length));
    }
  } else if (m == Modulation::gfsk || m == Modulation::cpfsk) {
    const auto bits = draw_bits(seed, symbols_needed + static_cast<std::size_t>(ModulationDefaults::gaussian_span) + 1);
    x = detail::fsk(bits, length, sps, m == Modulation::gfsk);
  } else {
    std::mt19937_64 rng(seed);
    const auto msg = detail::analog_message(rng, length + 64);
    switch (m) {
      case Modulation::wbfm: {
        x.resize(length);
        double phase = 0.0;
        for (std::size_t n = 0; n < length; ++n) {
          phase += 2.0 * std::numbers::pi * ModulationDefaults::fm_deviation * msg[n + 32];
          x[n] = std::polar(1.0, phase);
        }
        break;
      }
      case Modulation::am_dsb: {
        double peak = 0.0;
        for (std::size_t n = 0; n < length; ++n) peak = std::max(peak, std::abs(msg[n + 32]));
        x.resize(length);
        for (std::size_t n = 0; n < length; ++n) {
          x[n] = {1.0 + ModulationDefaults::am_depth * msg[n + 32] / peak, 0.0};
        }
        break;
      }
      case Modulation::am_ssb: {
        const auto h = hilbert_taps(31);
        const auto quad = detail::convolve_full(msg, h);
        x.resize(length);
        // Hilbert output is delayed by 15 samples relative to msg.
        for (std::size_t n = 0; n < length; ++n) x[n] = {msg[n + 32], quad[n + 32 + 15]};
        break;
      }
      default:
        throw ConfigError("unhandled modulation");
    }
  }
  normalize_power(x);
  return to_sequence(x);
}

}  // namespace cspm
