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

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "cspm/frontend.hpp"
#include "oracles.hpp"

namespace {

using namespace cspm;
using cd = std::complex<double>;

struct Signal {
  std::vector<double> re, im;
};

Signal random_signal(std::mt19937_64& rng, int T) {
  std::normal_distribution<double> g;
  Signal s{std::vector<double>(static_cast<std::size_t>(T)), std::vector<double>(static_cast<std::size_t>(T))};
  for (auto& v : s.re) v = g(rng);
  for (auto& v : s.im) v = g(rng);
  return s;
}

std::vector<cd> to_cd(const Signal& s) {
  std::vector<cd> out(s.re.size());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = {s.re[n], s.im[n]};
  return out;
}

ComplexFilterBank<double> single_filter(std::vector<cd> taps) {
  ComplexFilterBank<double> bank;
  const auto K = static_cast<Eigen::Index>(taps.size());
  bank.w_real.resize(1, K);
  bank.w_imag.resize(1, K);
  for (Eigen::Index k = 0; k < K; ++k) {
    bank.w_real(0, k) = taps[static_cast<std::size_t>(k)].real();
    bank.w_imag(0, k) = taps[static_cast<std::size_t>(k)].imag();
  }
  return bank;
}

TEST(ComplexConv, IdentityFilter) {
  std::mt19937_64 rng(1);
  const auto x = random_signal(rng, 10);
  for (auto taps : {std::vector<cd>{1.0}, std::vector<cd>{0.0, 1.0, 0.0}, std::vector<cd>{0.0, 0.0, 1.0, 0.0, 0.0}}) {
    const auto z = complex_conv_forward<double>(x.re, x.im, single_filter(taps));
    for (int n = 0; n < 10; ++n) {
      EXPECT_EQ(z.real(0, n), x.re[static_cast<std::size_t>(n)]);
      EXPECT_EQ(z.imag(0, n), x.im[static_cast<std::size_t>(n)]);
    }
  }
}

TEST(ComplexConv, FilterJRotatesByQuarterTurn) {
  std::mt19937_64 rng(2);
  const auto x = random_signal(rng, 8);
  const auto z = complex_conv_forward<double>(x.re, x.im, single_filter({cd(0.0, 1.0)}));
  for (int n = 0; n < 8; ++n) {
    EXPECT_EQ(z.real(0, n), -x.im[static_cast<std::size_t>(n)]);
    EXPECT_EQ(z.imag(0, n), x.re[static_cast<std::size_t>(n)]);
  }
}

TEST(ComplexConv, IntegerInstanceMatchesOracle) {
  // T=4, K=3, small integers: exact in double.
  const std::vector<cd> x{{1, -2}, {3, 0}, {-1, 4}, {2, 2}};
  const std::vector<cd> w{{2, 1}, {-1, 3}, {0, -2}};
  Signal s{{1, 3, -1, 2}, {-2, 0, 4, 2}};
  const auto z = complex_conv_forward<double>(s.re, s.im, single_filter(w));
  const auto want = oracle::complex_correlate(x, w);
  for (int n = 0; n < 4; ++n) {
    EXPECT_EQ(z.real(0, n), want[static_cast<std::size_t>(n)].real());
    EXPECT_EQ(z.imag(0, n), want[static_cast<std::size_t>(n)].imag());
  }
}

TEST(ComplexConv, RandomInstancesMatchOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int T = 4 + static_cast<int>(rng() % 29);
    const int K = 1 + 2 * static_cast<int>(rng() % 5);
    if (K > T) continue;
    const int S = 1 + static_cast<int>(rng() % 4);
    const auto x = random_signal(rng, T);
    const auto bank = make_free_bank<double>(S, K, rng());
    const auto z = complex_conv_forward<double>(x.re, x.im, bank);
    for (int s = 0; s < S; ++s) {
      std::vector<cd> w(static_cast<std::size_t>(K));
      for (int k = 0; k < K; ++k) w[static_cast<std::size_t>(k)] = {bank.w_real(s, k), bank.w_imag(s, k)};
      const auto want = oracle::complex_correlate(to_cd(x), w);
      for (int n = 0; n < T; ++n) {
        EXPECT_LE(std::abs(cd(z.real(s, n), z.imag(s, n)) - want[static_cast<std::size_t>(n)]),
                  1e-12 * (1.0 + std::abs(want[static_cast<std::size_t>(n)])));
      }
    }
  }
}

TEST(ComplexConv, LinearityAndPhaseEquivariance) {
  std::mt19937_64 rng(4);
  const auto x = random_signal(rng, 32);
  const auto bank = make_free_bank<double>(3, 9, 5);
  const auto z = complex_conv_forward<double>(x.re, x.im, bank);
  for (const cd c : {cd(2.0, -0.5), std::polar(1.0, 1.234), cd(-3.0, 0.0)}) {
    Signal y = x;
    for (std::size_t n = 0; n < y.re.size(); ++n) {
      const cd v = c * cd(x.re[n], x.im[n]);
      y.re[n] = v.real();
      y.im[n] = v.imag();
    }
    const auto zc = complex_conv_forward<double>(y.re, y.im, bank);
    for (int s = 0; s < 3; ++s) {
      for (int n = 0; n < 32; ++n) {
        const cd want = c * cd(z.real(s, n), z.imag(s, n));
        EXPECT_NEAR(zc.real(s, n), want.real(), 1e-12);
        EXPECT_NEAR(zc.imag(s, n), want.imag(), 1e-12);
      }
    }
  }
}

TEST(ComplexConv, FloatLinearity) {
  std::mt19937_64 rng(5);
  const auto xd = random_signal(rng, 32);
  std::vector<float> xr(xd.re.begin(), xd.re.end()), xi(xd.im.begin(), xd.im.end());
  const auto bank = make_free_bank<float>(2, 7, 6);
  const auto z = complex_conv_forward<float>(xr, xi, bank);
  const std::complex<float> c(0.6f, -1.3f);
  std::vector<float> yr(32), yi(32);
  for (int n = 0; n < 32; ++n) {
    const auto v = c * std::complex<float>(xr[static_cast<std::size_t>(n)], xi[static_cast<std::size_t>(n)]);
    yr[static_cast<std::size_t>(n)] = v.real();
    yi[static_cast<std::size_t>(n)] = v.imag();
  }
  const auto zc = complex_conv_forward<float>(yr, yi, bank);
  for (int s = 0; s < 2; ++s) {
    for (int n = 0; n < 32; ++n) {
      const auto want = c * std::complex<float>(z.real(s, n), z.imag(s, n));
      const float got_mag = std::abs(std::complex<float>(zc.real(s, n), zc.imag(s, n)) - want);
      EXPECT_LE(got_mag, 1e-6f * (1.0f + std::abs(want)) * 4.0f);
    }
  }
}

TEST(ComplexConv, ShortInputRejected) {
  std::vector<double> x(4, 0.0);
  EXPECT_THROW(complex_conv_forward<double>(x, x, make_free_bank<double>(1, 5, 1)), ShapeError);
  EXPECT_THROW(make_free_bank<double>(1, 4, 1), ConfigError);
}

// Central differences of L = sum(Gr * zr + Gi * zi) for a fixed random cotangent.
struct ConvLossFixture {
  Signal x;
  ComplexFilterBank<double> bank;
  SubbandResponse<double> cot;

  double loss() const {
    const auto z = complex_conv_forward<double>(x.re, x.im, bank);
    return (z.real.array() * cot.real.array()).sum() + (z.imag.array() * cot.imag.array()).sum();
  }
};

TEST(ComplexConvBackward, ZeroCotangentGivesZero) {
  std::mt19937_64 rng(6);
  const auto x = random_signal(rng, 12);
  const auto bank = make_free_bank<double>(2, 5, 2);
  SubbandResponse<double> g{Matrix<double>::Zero(2, 12), Matrix<double>::Zero(2, 12)};
  const auto grad = complex_conv_backward<double>(x.re, x.im, bank, g);
  EXPECT_EQ(grad.w_real.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(grad.w_imag.cwiseAbs().maxCoeff(), 0.0);
  for (double v : grad.x_real) EXPECT_EQ(v, 0.0);
  for (double v : grad.x_imag) EXPECT_EQ(v, 0.0);
}

TEST(ComplexConvBackward, SingleOutputRealPartGivesConjugateWindow) {
  // L = Re z[n0] with K = 3: dL/dw_r[k] = x_r[m], dL/dw_i[k] = -x_i[m], m = n0 + k - 1.
  std::mt19937_64 rng(7);
  const auto x = random_signal(rng, 8);
  const auto bank = make_free_bank<double>(1, 3, 3);
  SubbandResponse<double> g{Matrix<double>::Zero(1, 8), Matrix<double>::Zero(1, 8)};
  const int n0 = 4;
  g.real(0, n0) = 1.0;
  const auto grad = complex_conv_backward<double>(x.re, x.im, bank, g);
  for (int k = 0; k < 3; ++k) {
    const auto m = static_cast<std::size_t>(n0 + k - 1);
    EXPECT_DOUBLE_EQ(grad.w_real(0, k), x.re[m]);
    EXPECT_DOUBLE_EQ(grad.w_imag(0, k), -x.im[m]);
  }
}

TEST(ComplexConvBackward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int T = 9 + static_cast<int>(rng() % 24);
    const int K = 1 + 2 * static_cast<int>(rng() % 5);
    const int S = 1 + static_cast<int>(rng() % 4);
    ConvLossFixture f{random_signal(rng, T), make_free_bank<double>(S, K, rng()), {}};
    f.cot.real = Matrix<double>::Random(S, T);
    f.cot.imag = Matrix<double>::Random(S, T);
    const auto grad = complex_conv_backward<double>(f.x.re, f.x.im, f.bank, f.cot);
    const double h = 1e-5;
    auto check = [&](double& slot, double analytic) {
      const double saved = slot;
      slot = saved + h;
      const double up = f.loss();
      slot = saved - h;
      const double down = f.loss();
      slot = saved;
      const double numeric = (up - down) / (2 * h);
      EXPECT_LT(std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-4}), 1e-6);
    };
    for (int s = 0; s < S; ++s) {
      for (int k = 0; k < K; ++k) {
        check(f.bank.w_real(s, k), grad.w_real(s, k));
        check(f.bank.w_imag(s, k), grad.w_imag(s, k));
      }
    }
    for (int n = 0; n < T; ++n) {
      check(f.x.re[static_cast<std::size_t>(n)], grad.x_real[static_cast<std::size_t>(n)]);
      check(f.x.im[static_cast<std::size_t>(n)], grad.x_imag[static_cast<std::size_t>(n)]);
    }
  }
}

TEST(Morlet, DefaultBankShapeAndSymmetry) {
  const auto bank = make_morlet_bank<double>(8, 33, FilterParameterization::fixed_morlet);
  EXPECT_EQ(bank.subbands(), 8);
  EXPECT_EQ(bank.taps(), 33);
  for (int s = 0; s < 8; ++s) {
    double energy = 0.0;
    for (int k = 0; k < 33; ++k) {
      const double a = std::hypot(bank.w_real(s, k), bank.w_imag(s, k));
      const double b = std::hypot(bank.w_real(s, 32 - k), bank.w_imag(s, 32 - k));
      EXPECT_NEAR(a, b, 1e-14);
      energy += a * a;
    }
    EXPECT_NEAR(energy, 1.0, 1e-12);
  }
}

TEST(Morlet, DftPeakWithinOneBinOfCenter) {
  const int K = 33, S = 8, N = 512;
  const auto bank = make_morlet_bank<double>(S, K, FilterParameterization::fixed_morlet);
  for (int s = 0; s < S; ++s) {
    std::vector<cd> taps(K);
    for (int k = 0; k < K; ++k) taps[static_cast<std::size_t>(k)] = {bank.w_real(s, k), bank.w_imag(s, k)};
    double best_f = 0.0, best = -1.0;
    for (int p = 0; p < N; ++p) {
      const double f = -0.5 + static_cast<double>(p) / N;
      const double mag = oracle::dft_magnitude(taps, f);
      if (mag > best) {
        best = mag;
        best_f = f;
      }
    }
    EXPECT_LE(std::abs(best_f - bank.center_freqs[static_cast<std::size_t>(s)]), 1.0 / N + 1e-12) << "subband " << s;
  }
}

// L = sum(Gr * wr + Gi * wi) as a function of (f, sigma).
double morlet_loss(ComplexFilterBank<double> bank, const Matrix<double>& gr, const Matrix<double>& gi) {
  regenerate_morlet_taps(bank);
  return (bank.w_real.array() * gr.array()).sum() + (bank.w_imag.array() * gi.array()).sum();
}

TEST(MorletBackward, ZeroTapGradient) {
  const auto bank = make_morlet_bank<double>(3, 7, FilterParameterization::learnable_morlet);
  const auto g = morlet_backward(bank, Matrix<double>(Matrix<double>::Zero(3, 7)), Matrix<double>(Matrix<double>::Zero(3, 7)));
  for (double v : g.center_freqs) EXPECT_EQ(v, 0.0);
  for (double v : g.bandwidths) EXPECT_EQ(v, 0.0);
}

TEST(MorletBackward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> uf(-0.45, 0.45), us(0.8, 4.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto bank = make_morlet_bank<double>(1, 5, FilterParameterization::learnable_morlet);
    bank.center_freqs[0] = uf(rng);
    bank.bandwidths[0] = us(rng);
    regenerate_morlet_taps(bank);
    const Matrix<double> gr = Matrix<double>::Random(1, 5), gi = Matrix<double>::Random(1, 5);
    const auto g = morlet_backward(bank, gr, gi);
    const double h = 1e-5;
    auto numeric = [&](double& slot) {
      const double saved = slot;
      slot = saved + h;
      const double up = morlet_loss(bank, gr, gi);
      slot = saved - h;
      const double down = morlet_loss(bank, gr, gi);
      slot = saved;
      return (up - down) / (2 * h);
    };
    const double nf = numeric(bank.center_freqs[0]);
    const double ns = numeric(bank.bandwidths[0]);
    EXPECT_LT(std::abs(nf - g.center_freqs[0]) / std::max({std::abs(nf), std::abs(g.center_freqs[0]), 1e-4}), 1e-5);
    EXPECT_LT(std::abs(ns - g.bandwidths[0]) / std::max({std::abs(ns), std::abs(g.bandwidths[0]), 1e-4}), 1e-5);
  }
}

TEST(MorletBackward, ClampedBandwidthHasZeroGradient) {
  auto bank = make_morlet_bank<double>(2, 9, FilterParameterization::learnable_morlet);
  bank.bandwidths[0] = kMinMorletBandwidth;
  bank.bandwidths[1] = 0.1;
  regenerate_morlet_taps(bank);
  const auto g = morlet_backward(bank, Matrix<double>(Matrix<double>::Random(2, 9)), Matrix<double>(Matrix<double>::Random(2, 9)));
  EXPECT_EQ(g.bandwidths[0], 0.0);
  EXPECT_EQ(g.bandwidths[1], 0.0);
  EXPECT_NE(g.center_freqs[0], 0.0);
  // Below the floor the taps equal those at the floor.
  auto at_floor = bank;
  at_floor.bandwidths[1] = kMinMorletBandwidth;
  regenerate_morlet_taps(at_floor);
  EXPECT_EQ(bank.w_real.row(1), at_floor.w_real.row(1));
}

}  // namespace
