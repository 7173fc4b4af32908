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

// Independent brute-force reference implementations. Everything here works
// on std::vector / std::complex with plain loops and shares no code with the
// library beyond its public data types.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

using cd = std::complex<double>;
using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major, m[r][c]

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-12});
  return std::abs(a - b) / scale;
}

inline Mat random_mat(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat m(rows, Vec(cols));
  for (auto& r : m)
    for (auto& v : r) v = u(rng);
  return m;
}

// y[n] = sum_k w[k] x[n + k - (K-1)/2], zero outside [0, T).
inline std::vector<cd> complex_correlate(const std::vector<cd>& x, const std::vector<cd>& w) {
  const int T = static_cast<int>(x.size()), K = static_cast<int>(w.size()), half = (K - 1) / 2;
  std::vector<cd> y(x.size());
  for (int n = 0; n < T; ++n) {
    cd acc = 0.0;
    for (int k = 0; k < K; ++k) {
      const int m = n + k - half;
      if (m >= 0 && m < T) acc += w[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(m)];
    }
    y[static_cast<std::size_t>(n)] = acc;
  }
  return y;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// One GRU direction over a sequence, gate blocks [update | reset | candidate].
// x[t][i], Wi[i][3H], Wh[j][3H]; returns h[t][j] in processing order indexed
// by original time.
inline Mat gru_sequence(const Mat& x, const Mat& Wi, const Mat& Wh, const Vec& bi, const Vec& bh, bool reversed) {
  const std::size_t T = x.size(), H = Wh.size(), I = Wi.size();
  Mat out(T, Vec(H, 0.0));
  Vec h(H, 0.0);
  for (std::size_t step = 0; step < T; ++step) {
    const std::size_t t = reversed ? T - 1 - step : step;
    Vec u(H), r(H), c(H), hn(H);
    for (std::size_t j = 0; j < H; ++j) {
      double au = bi[j] + bh[j], ar = bi[H + j] + bh[H + j], xc = bi[2 * H + j], hc = bh[2 * H + j];
      for (std::size_t i = 0; i < I; ++i) {
        au += x[t][i] * Wi[i][j];
        ar += x[t][i] * Wi[i][H + j];
        xc += x[t][i] * Wi[i][2 * H + j];
      }
      for (std::size_t k = 0; k < H; ++k) {
        au += h[k] * Wh[k][j];
        ar += h[k] * Wh[k][H + j];
        hc += h[k] * Wh[k][2 * H + j];
      }
      u[j] = sigmoid(au);
      r[j] = sigmoid(ar);
      c[j] = std::tanh(xc + r[j] * hc);
    }
    for (std::size_t j = 0; j < H; ++j) hn[j] = (1.0 - u[j]) * c[j] + u[j] * h[j];
    h = hn;
    out[t] = h;
  }
  return out;
}

// pooled = sum_t softmax_t(v . tanh(W^T h_t + b) / sqrt(A)) h_t, for one example.
inline Vec attention_pool(const Mat& hs, const Mat& W, const Vec& b, const Vec& v, Vec* alpha_out = nullptr) {
  const std::size_t T = hs.size(), D = W.size(), A = v.size();
  Vec e(T);
  for (std::size_t t = 0; t < T; ++t) {
    double s = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      double pre = b[a];
      for (std::size_t d = 0; d < D; ++d) pre += hs[t][d] * W[d][a];
      s += v[a] * std::tanh(pre);
    }
    e[t] = s / std::sqrt(static_cast<double>(A));
  }
  double top = e[0];
  for (double x : e) top = std::max(top, x);
  double z = 0.0;
  for (auto& x : e) z += (x = std::exp(x - top));
  Vec pooled(D, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    e[t] /= z;
    for (std::size_t d = 0; d < D; ++d) pooled[d] += e[t] * hs[t][d];
  }
  if (alpha_out) *alpha_out = e;
  return pooled;
}

// Mean softmax cross-entropy in long double, no max shift.
inline long double cross_entropy(const Mat& logits, const std::vector<std::uint32_t>& labels) {
  long double total = 0.0L;
  for (std::size_t b = 0; b < logits.size(); ++b) {
    long double z = 0.0L;
    for (double l : logits[b]) z += std::exp(static_cast<long double>(l));
    total += std::log(z) - static_cast<long double>(logits[b][labels[b]]);
  }
  return total / static_cast<long double>(logits.size());
}

// Textbook Adam run from zero state over a sequence of gradients, scalar.
inline double adam_scalar(double theta, const Vec& grads, double lr, double b1, double b2, double eps) {
  double m = 0.0, v = 0.0;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const double g = grads[t - 1];
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double mhat = m / (1.0 - std::pow(b1, static_cast<double>(t)));
    const double vhat = v / (1.0 - std::pow(b2, static_cast<double>(t)));
    theta -= lr * mhat / (std::sqrt(vhat) + eps);
  }
  return theta;
}

// Naive DFT magnitude at normalized frequency f (cycles/sample).
inline double dft_magnitude(const std::vector<cd>& x, double f) {
  cd acc = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) acc += x[n] * std::polar(1.0, -2.0 * M_PI * f * static_cast<double>(n));
  return std::abs(acc);
}

// Gray-coded QPSK by table: (b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt 2.
inline cd qpsk_symbol(int b0, int b1) {
  static const double table[2] = {1.0, -1.0};
  return cd(table[b0], table[b1]) / std::sqrt(2.0);
}

}  // namespace oracle
