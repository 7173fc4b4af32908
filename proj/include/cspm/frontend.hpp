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
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cspm/errors.hpp"
#include "cspm/tensor.hpp"

namespace cspm {

enum class FilterParameterization { free, fixed_morlet, learnable_morlet };

// Smallest Gaussian width (samples) a learnable Morlet filter may take.
inline constexpr double kMinMorletBandwidth = 0.5;

// S complex FIR filters of K taps. Tap k of a filter multiplies input sample
// n + k - (K-1)/2 (correlation orientation, no kernel flip). Morlet banks keep
// their taps in sync with (center_freqs, bandwidths) via regenerate_morlet_taps.
template <typename Scalar>
struct ComplexFilterBank {
  Matrix<Scalar> w_real;  // S x K
  Matrix<Scalar> w_imag;  // S x K
  FilterParameterization parameterization = FilterParameterization::free;
  std::vector<Scalar> center_freqs;  // cycles/sample
  std::vector<Scalar> bandwidths;    // Gaussian sigma, samples

  int subbands() const { return static_cast<int>(w_real.rows()); }
  int taps() const { return static_cast<int>(w_real.cols()); }
  bool is_morlet() const { return parameterization != FilterParameterization::free; }

  void validate() const {
    if (w_real.rows() < 1) throw ShapeError("filter bank needs at least one subband");
    if (w_real.rows() != w_imag.rows() || w_real.cols() != w_imag.cols()) {
      throw ShapeError("real and imaginary tap arrays differ in shape");
    }
    if (w_real.cols() < 1 || w_real.cols() % 2 == 0) throw ShapeError("filter length must be odd");
    if (is_morlet()) {
      if (center_freqs.size() != static_cast<std::size_t>(subbands()) ||
          bandwidths.size() != static_cast<std::size_t>(subbands())) {
        throw ShapeError("Morlet parameters do not match the subband count");
      }
    }
  }
};

// Complex response z_s[n] of every subband: row s of real/imag.
template <typename Scalar>
struct SubbandResponse {
  Matrix<Scalar> real;  // S x T
  Matrix<Scalar> imag;  // S x T

  int subbands() const { return static_cast<int>(real.rows()); }
  int length() const { return static_cast<int>(real.cols()); }
};

template <typename Scalar>
ComplexFilterBank<Scalar> make_free_bank(int subbands, int taps, std::uint64_t seed) {
  if (subbands < 1 || taps < 1 || taps % 2 == 0) throw ConfigError("free bank needs S >= 1 and odd K");
  ComplexFilterBank<Scalar> bank;
  bank.w_real.resize(subbands, taps);
  bank.w_imag.resize(subbands, taps);
  const double bound = 1.0 / std::sqrt(static_cast<double>(subbands) * taps);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index k = 0; k < bank.w_real.size(); ++k) bank.w_real.data()[k] = static_cast<Scalar>(dist(rng));
  for (Eigen::Index k = 0; k < bank.w_imag.size(); ++k) bank.w_imag.data()[k] = static_cast<Scalar>(dist(rng));
  return bank;
}

// Rebuilds taps from (f_s, sigma_s): a Gaussian-windowed complex exponential,
// L2-normalized per filter. Sigma below the floor is clamped.
template <typename Scalar>
void regenerate_morlet_taps(ComplexFilterBank<Scalar>& bank) {
  const int s_count = static_cast<int>(bank.center_freqs.size());
  const int k_count = bank.taps();
  const int half = (k_count - 1) / 2;
  for (int s = 0; s < s_count; ++s) {
    const Scalar sigma = std::max(bank.bandwidths[s], static_cast<Scalar>(kMinMorletBandwidth));
    const Scalar freq = bank.center_freqs[s];
    Scalar energy = 0;
    for (int k = 0; k < k_count; ++k) {
      const Scalar n = static_cast<Scalar>(k - half);
      const Scalar g = std::exp(-n * n / (2 * sigma * sigma));
      const Scalar angle = 2 * std::numbers::pi_v<Scalar> * freq * n;
      bank.w_real(s, k) = g * std::cos(angle);
      bank.w_imag(s, k) = g * std::sin(angle);
      energy += g * g;
    }
    const Scalar norm = std::sqrt(energy);
    bank.w_real.row(s) /= norm;
    bank.w_imag.row(s) /= norm;
  }
}

// Center frequencies evenly spaced over (-0.5, 0.5); the initial width puts
// neighbouring passbands about two frequency-domain standard deviations apart.
template <typename Scalar>
ComplexFilterBank<Scalar> make_morlet_bank(int subbands, int taps, FilterParameterization mode) {
  if (mode == FilterParameterization::free) throw ConfigError("make_morlet_bank needs a Morlet mode");
  if (subbands < 1 || taps < 1 || taps % 2 == 0) throw ConfigError("Morlet bank needs S >= 1 and odd K");
  ComplexFilterBank<Scalar> bank;
  bank.parameterization = mode;
  bank.w_real.resize(subbands, taps);
  bank.w_imag.resize(subbands, taps);
  const double sigma = std::max(static_cast<double>(subbands) / std::numbers::pi, 1.0);
  for (int s = 0; s < subbands; ++s) {
    bank.center_freqs.push_back(static_cast<Scalar>(-0.5 + (s + 0.5) / subbands));
    bank.bandwidths.push_back(static_cast<Scalar>(sigma));
  }
  regenerate_morlet_taps(bank);
  return bank;
}

// y_{s,r} = x_r*w_{s,r} - x_i*w_{s,i},  y_{s,i} = x_r*w_{s,i} + x_i*w_{s,r}
// with zero padding and output length T.
template <typename Scalar>
SubbandResponse<Scalar> complex_conv_forward(std::span<const Scalar> x_real, std::span<const Scalar> x_imag,
                                             const ComplexFilterBank<Scalar>& bank) {
  bank.validate();
  const int length = static_cast<int>(x_real.size());
  const int k_count = bank.taps();
  if (x_imag.size() != x_real.size()) throw ShapeError("I and Q lengths differ");
  if (length < k_count) {
    throw ShapeError("sequence length " + std::to_string(length) + " shorter than filter length " +
                     std::to_string(k_count));
  }
  const int half = (k_count - 1) / 2;
  const int s_count = bank.subbands();
  SubbandResponse<Scalar> z{Matrix<Scalar>::Zero(s_count, length), Matrix<Scalar>::Zero(s_count, length)};
  for (int s = 0; s < s_count; ++s) {
    const Scalar* wr = bank.w_real.row(s).data();
    const Scalar* wi = bank.w_imag.row(s).data();
    Scalar* zr = z.real.row(s).data();
    Scalar* zi = z.imag.row(s).data();
    for (int n = 0; n < length; ++n) {
      const int k_lo = std::max(0, half - n);
      const int k_hi = std::min(k_count, length - n + half);
      Scalar acc_r = 0, acc_i = 0;
      for (int k = k_lo; k < k_hi; ++k) {
        const int m = n + k - half;
        acc_r += x_real[m] * wr[k] - x_imag[m] * wi[k];
        acc_i += x_real[m] * wi[k] + x_imag[m] * wr[k];
      }
      zr[n] = acc_r;
      zi[n] = acc_i;
    }
  }
  return z;
}

// Adjoint of complex_conv_forward: grad_x += grad_z (*) conj(w) and
// grad_w += grad_z (*) conj(x). Gradient outputs are accumulated; pass empty
// spans to skip the input gradient.
template <typename Scalar>
void complex_conv_backward_accumulate(std::span<const Scalar> x_real, std::span<const Scalar> x_imag,
                                      const ComplexFilterBank<Scalar>& bank, const SubbandResponse<Scalar>& grad_z,
                                      std::span<Scalar> grad_x_real, std::span<Scalar> grad_x_imag,
                                      Matrix<Scalar>* grad_w_real, Matrix<Scalar>* grad_w_imag) {
  const int length = static_cast<int>(x_real.size());
  const int k_count = bank.taps();
  const int s_count = bank.subbands();
  if (grad_z.subbands() != s_count || grad_z.length() != length || grad_z.imag.rows() != s_count ||
      grad_z.imag.cols() != length) {
    throw ShapeError("subband cotangent shape does not match the forward pass");
  }
  const bool want_x = !grad_x_real.empty();
  if (want_x && (grad_x_real.size() != x_real.size() || grad_x_imag.size() != x_imag.size())) {
    throw ShapeError("input gradient buffers have the wrong length");
  }
  const bool want_w = grad_w_real != nullptr;
  if (want_w && (grad_w_real->rows() != s_count || grad_w_real->cols() != k_count ||
                 grad_w_imag->rows() != s_count || grad_w_imag->cols() != k_count)) {
    throw ShapeError("tap gradient buffers have the wrong shape");
  }
  const int half = (k_count - 1) / 2;
  for (int s = 0; s < s_count; ++s) {
    const Scalar* wr = bank.w_real.row(s).data();
    const Scalar* wi = bank.w_imag.row(s).data();
    const Scalar* gr = grad_z.real.row(s).data();
    const Scalar* gi = grad_z.imag.row(s).data();
    for (int n = 0; n < length; ++n) {
      const Scalar g_r = gr[n], g_i = gi[n];
      if (g_r == 0 && g_i == 0) continue;
      const int k_lo = std::max(0, half - n);
      const int k_hi = std::min(k_count, length - n + half);
      for (int k = k_lo; k < k_hi; ++k) {
        const int m = n + k - half;
        if (want_x) {
          grad_x_real[m] += g_r * wr[k] + g_i * wi[k];
          grad_x_imag[m] += g_i * wr[k] - g_r * wi[k];
        }
        if (want_w) {
          (*grad_w_real)(s, k) += g_r * x_real[m] + g_i * x_imag[m];
          (*grad_w_imag)(s, k) += g_i * x_real[m] - g_r * x_imag[m];
        }
      }
    }
  }
}

template <typename Scalar>
struct ComplexConvGrad {
  std::vector<Scalar> x_real, x_imag;
  Matrix<Scalar> w_real, w_imag;
};

template <typename Scalar>
ComplexConvGrad<Scalar> complex_conv_backward(std::span<const Scalar> x_real, std::span<const Scalar> x_imag,
                                              const ComplexFilterBank<Scalar>& bank,
                                              const SubbandResponse<Scalar>& grad_z) {
  bank.validate();
  ComplexConvGrad<Scalar> g;
  g.x_real.assign(x_real.size(), Scalar(0));
  g.x_imag.assign(x_imag.size(), Scalar(0));
  g.w_real = Matrix<Scalar>::Zero(bank.subbands(), bank.taps());
  g.w_imag = Matrix<Scalar>::Zero(bank.subbands(), bank.taps());
  complex_conv_backward_accumulate<Scalar>(x_real, x_imag, bank, grad_z, g.x_real, g.x_imag, &g.w_real, &g.w_imag);
  return g;
}

template <typename Scalar>
struct MorletGrad {
  std::vector<Scalar> center_freqs;
  std::vector<Scalar> bandwidths;
};

// Chain rule from tap gradients to (f_s, sigma_s). With w_n = u_n / N(sigma),
// u_n = exp(-n^2 / (2 sigma^2)) exp(j 2 pi f n):
//   dw_n/df     = j 2 pi n w_n
//   dw_n/dsigma = w_n (n^2 / sigma^3 - N'(sigma) / N(sigma))
// A clamped sigma (sigma <= floor) receives zero gradient.
template <typename Scalar>
MorletGrad<Scalar> morlet_backward(const ComplexFilterBank<Scalar>& bank, const Matrix<Scalar>& grad_w_real,
                                   const Matrix<Scalar>& grad_w_imag) {
  if (!bank.is_morlet()) throw ConfigError("morlet_backward needs a Morlet bank");
  const int s_count = bank.subbands();
  const int k_count = bank.taps();
  if (grad_w_real.rows() != s_count || grad_w_real.cols() != k_count || grad_w_imag.rows() != s_count ||
      grad_w_imag.cols() != k_count) {
    throw ShapeError("tap gradient shape does not match the bank");
  }
  const int half = (k_count - 1) / 2;
  MorletGrad<Scalar> out{std::vector<Scalar>(s_count, Scalar(0)), std::vector<Scalar>(s_count, Scalar(0))};
  for (int s = 0; s < s_count; ++s) {
    const Scalar sigma_raw = bank.bandwidths[s];
    const bool clamped = sigma_raw <= static_cast<Scalar>(kMinMorletBandwidth);
    const Scalar sigma = clamped ? static_cast<Scalar>(kMinMorletBandwidth) : sigma_raw;
    const Scalar sigma3 = sigma * sigma * sigma;
    // N'(sigma) / N(sigma) = sum(g_n^2 n^2) / (sigma^3 sum(g_n^2))
    Scalar energy = 0, weighted = 0;
    for (int k = 0; k < k_count; ++k) {
      const Scalar n = static_cast<Scalar>(k - half);
      const Scalar g2 = std::exp(-n * n / (sigma * sigma));
      energy += g2;
      weighted += g2 * n * n;
    }
    const Scalar norm_log_slope = weighted / (sigma3 * energy);
    Scalar d_freq = 0, d_sigma = 0;
    for (int k = 0; k < k_count; ++k) {
      const Scalar n = static_cast<Scalar>(k - half);
      const Scalar wr = bank.w_real(s, k), wi = bank.w_imag(s, k);
      const Scalar gr = grad_w_real(s, k), gi = grad_w_imag(s, k);
      d_freq += 2 * std::numbers::pi_v<Scalar> * n * (gi * wr - gr * wi);
      d_sigma += (gr * wr + gi * wi) * (n * n / sigma3 - norm_log_slope);
    }
    out.center_freqs[s] = d_freq;
    out.bandwidths[s] = clamped ? Scalar(0) : d_sigma;
  }
  return out;
}

}  // namespace cspm
