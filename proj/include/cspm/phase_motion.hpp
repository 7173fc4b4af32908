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

#include <cmath>
#include <string>
#include <vector>

#include "cspm/errors.hpp"
#include "cspm/frontend.hpp"
#include "cspm/tensor.hpp"

namespace cspm {

struct LagSet {
  std::vector<int> lags{1, 2, 4, 8};

  int size() const { return static_cast<int>(lags.size()); }

  void validate(int length) const {
    for (std::size_t k = 0; k < lags.size(); ++k) {
      if (lags[k] < 1) throw ConfigError("lags must be positive");
      if (k > 0 && lags[k] <= lags[k - 1]) throw ConfigError("lags must be strictly ascending");
      if (lags[k] >= length) {
        throw ShapeError("lag " + std::to_string(lags[k]) + " must be shorter than the sequence length " +
                         std::to_string(length));
      }
    }
  }
};

inline int feature_channel_count(int subbands, int lag_count) { return 3 * subbands * (1 + lag_count); }

// Channel layout, subband-major: for each s, the base triplet
// [log1p|z|, Re z, Im z] followed by one [log1p|d|, Re d, Im d] triplet per
// lag in ascending order.
inline int base_channel(int subband, int lag_count) { return subband * 3 * (1 + lag_count); }
inline int motion_channel(int subband, int lag_index, int lag_count) {
  return subband * 3 * (1 + lag_count) + 3 * (1 + lag_index);
}

template <typename Scalar>
struct FeatureMap {
  Matrix<Scalar> channels;  // 3S(1+L) x T
  int subbands = 0;
  int lag_count = 0;
};

// Phase-motion products d_{s,l}[n] = z_s[n] conj(z_s[n-l]); zero for n < l.
// Row s*L + l.
template <typename Scalar>
struct MotionProducts {
  Matrix<Scalar> real;
  Matrix<Scalar> imag;
  int subbands = 0;
  int lag_count = 0;
};

template <typename Scalar>
Matrix<Scalar> base_features(const SubbandResponse<Scalar>& z) {
  const int s_count = z.subbands(), length = z.length();
  Matrix<Scalar> b(3 * s_count, length);
  for (int s = 0; s < s_count; ++s) {
    for (int n = 0; n < length; ++n) {
      const Scalar re = z.real(s, n), im = z.imag(s, n);
      b(3 * s, n) = std::log1p(std::sqrt(re * re + im * im));
      b(3 * s + 1, n) = re;
      b(3 * s + 2, n) = im;
    }
  }
  return b;
}

template <typename Scalar>
MotionProducts<Scalar> phase_motion_products(const SubbandResponse<Scalar>& z, const LagSet& lags) {
  const int s_count = z.subbands(), length = z.length(), l_count = lags.size();
  lags.validate(length);
  MotionProducts<Scalar> d{Matrix<Scalar>::Zero(s_count * l_count, length),
                           Matrix<Scalar>::Zero(s_count * l_count, length), s_count, l_count};
  for (int s = 0; s < s_count; ++s) {
    for (int li = 0; li < l_count; ++li) {
      const int lag = lags.lags[li];
      const int row = s * l_count + li;
      for (int n = lag; n < length; ++n) {
        const Scalar ar = z.real(s, n), ai = z.imag(s, n);
        const Scalar cr = z.real(s, n - lag), ci = z.imag(s, n - lag);
        d.real(row, n) = ar * cr + ai * ci;
        d.imag(row, n) = ai * cr - ar * ci;
      }
    }
  }
  return d;
}

template <typename Scalar>
Matrix<Scalar> motion_features(const MotionProducts<Scalar>& d) {
  const auto rows = d.real.rows(), length = d.real.cols();
  Matrix<Scalar> out(3 * rows, length);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index n = 0; n < length; ++n) {
      const Scalar re = d.real(r, n), im = d.imag(r, n);
      out(3 * r, n) = std::log1p(std::sqrt(re * re + im * im));
      out(3 * r + 1, n) = re;
      out(3 * r + 2, n) = im;
    }
  }
  return out;
}

template <typename Scalar>
FeatureMap<Scalar> assemble_feature_map(const Matrix<Scalar>& base, const Matrix<Scalar>& motion, int subbands,
                                        int lag_count) {
  if (base.rows() != 3 * subbands || motion.rows() != 3 * subbands * lag_count ||
      (lag_count > 0 && base.cols() != motion.cols())) {
    throw ShapeError("base and motion feature shapes are inconsistent");
  }
  FeatureMap<Scalar> fm;
  fm.subbands = subbands;
  fm.lag_count = lag_count;
  fm.channels.resize(feature_channel_count(subbands, lag_count), base.cols());
  for (int s = 0; s < subbands; ++s) {
    fm.channels.middleRows(base_channel(s, lag_count), 3) = base.middleRows(3 * s, 3);
    for (int li = 0; li < lag_count; ++li) {
      fm.channels.middleRows(motion_channel(s, li, lag_count), 3) = motion.middleRows(3 * (s * lag_count + li), 3);
    }
  }
  return fm;
}

template <typename Scalar>
FeatureMap<Scalar> phase_motion_features(const SubbandResponse<Scalar>& z, const LagSet& lags) {
  return assemble_feature_map<Scalar>(base_features(z), motion_features(phase_motion_products(z, lags)),
                                      z.subbands(), lags.size());
}

namespace detail {

// d log1p(|v|) / d(re, im) = (re, im) / (|v| (1 + |v|)); defined as 0 at v = 0.
template <typename Scalar>
inline Scalar log_magnitude_slope(Scalar re, Scalar im) {
  const Scalar mag = std::sqrt(re * re + im * im);
  return mag > 0 ? Scalar(1) / (mag * (1 + mag)) : Scalar(0);
}

}  // namespace detail

// Gradient with respect to z of a scalar loss, given the loss gradient on
// every feature channel (3S(1+L) x T, same layout as the forward map).
template <typename Scalar>
SubbandResponse<Scalar> phase_motion_backward(const SubbandResponse<Scalar>& z, const LagSet& lags,
                                              const Matrix<Scalar>& grad_features) {
  const int s_count = z.subbands(), length = z.length(), l_count = lags.size();
  if (grad_features.rows() != feature_channel_count(s_count, l_count) || grad_features.cols() != length) {
    throw ShapeError("feature cotangent shape does not match the forward map");
  }
  lags.validate(length);
  SubbandResponse<Scalar> g{Matrix<Scalar>::Zero(s_count, length), Matrix<Scalar>::Zero(s_count, length)};
  for (int s = 0; s < s_count; ++s) {
    const int bc = base_channel(s, l_count);
    for (int n = 0; n < length; ++n) {
      const Scalar re = z.real(s, n), im = z.imag(s, n);
      const Scalar slope = grad_features(bc, n) * detail::log_magnitude_slope(re, im);
      g.real(s, n) += slope * re + grad_features(bc + 1, n);
      g.imag(s, n) += slope * im + grad_features(bc + 2, n);
    }
    for (int li = 0; li < l_count; ++li) {
      const int lag = lags.lags[li];
      const int mc = motion_channel(s, li, l_count);
      for (int n = lag; n < length; ++n) {
        const Scalar ar = z.real(s, n), ai = z.imag(s, n);
        const Scalar cr = z.real(s, n - lag), ci = z.imag(s, n - lag);
        const Scalar dr = ar * cr + ai * ci;
        const Scalar di = ai * cr - ar * ci;
        const Scalar slope = grad_features(mc, n) * detail::log_magnitude_slope(dr, di);
        const Scalar gdr = slope * dr + grad_features(mc + 1, n);
        const Scalar gdi = slope * di + grad_features(mc + 2, n);
        // d = a conj(c): grad_a = g c, grad_c = a conj(g)
        g.real(s, n) += gdr * cr - gdi * ci;
        g.imag(s, n) += gdr * ci + gdi * cr;
        g.real(s, n - lag) += gdr * ar + gdi * ai;
        g.imag(s, n - lag) += gdr * ai - gdi * ar;
      }
    }
  }
  return g;
}

}  // namespace cspm
