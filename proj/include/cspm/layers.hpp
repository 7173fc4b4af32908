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
#include <random>
#include <string>
#include <vector>

#include "cspm/errors.hpp"
#include "cspm/tensor.hpp"

// Layers of the temporal classifier. Sequence activations are stored
// time-major: row t*B + b holds time step t of example b, columns are
// channels. Every layer keeps what its backward pass needs from the most
// recent forward call; inputs are passed back in explicitly.
namespace cspm {

namespace detail {

template <typename Scalar>
void fill_uniform(Matrix<Scalar>& m, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = static_cast<Scalar>(dist(rng));
}

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return (Scalar(1) + (-x).exp()).inverse();
}

inline void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace detail

// Per-channel normalization over all (example, time) rows.
template <typename Scalar>
class BatchNorm1d {
 public:
  Param<Scalar> gamma, beta, running_mean, running_var;

  BatchNorm1d() = default;
  BatchNorm1d(int channels, double momentum, double eps)
      : gamma("bn.gamma", 1, channels),
        beta("bn.beta", 1, channels),
        running_mean("bn.running_mean", 1, channels, false, true),
        running_var("bn.running_var", 1, channels, false, true),
        momentum_(momentum),
        eps_(eps) {
    gamma.value.setOnes();
    running_var.value.setOnes();
  }

  int channels() const { return static_cast<int>(gamma.value.cols()); }

  Matrix<Scalar> forward(const Matrix<Scalar>& x, bool training) {
    detail::require(x.cols() == channels(), "batch-norm channel count mismatch");
    const auto rows = x.rows();
    training_ = training;
    if (training) {
      if (rows < 2) throw ConfigError("batch normalization in training mode needs at least two values per channel");
      const Eigen::Array<Scalar, 1, Eigen::Dynamic> mean = x.colwise().mean().array();
      const Matrix<Scalar> centered = x.rowwise() - mean.matrix();
      const Eigen::Array<Scalar, 1, Eigen::Dynamic> var =
          centered.array().square().colwise().sum() / static_cast<Scalar>(rows);
      inv_std_ = (var + static_cast<Scalar>(eps_)).rsqrt();
      const auto m = static_cast<Scalar>(momentum_);
      const Scalar unbias = static_cast<Scalar>(rows) / static_cast<Scalar>(rows - 1);
      running_mean.value = ((1 - m) * running_mean.value.array() + m * mean).matrix();
      running_var.value = ((1 - m) * running_var.value.array() + m * unbias * var).matrix();
      xhat_ = (centered.array().rowwise() * inv_std_).matrix();
    } else {
      inv_std_ = (running_var.value.array() + static_cast<Scalar>(eps_)).rsqrt();
      xhat_ = ((x.rowwise() - running_mean.value.row(0)).array().rowwise() * inv_std_).matrix();
    }
    return ((xhat_.array().rowwise() * gamma.value.row(0).array()).rowwise() + beta.value.row(0).array()).matrix();
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& dy) {
    detail::require(dy.rows() == xhat_.rows() && dy.cols() == xhat_.cols(), "batch-norm cotangent shape mismatch");
    gamma.grad += (dy.array() * xhat_.array()).colwise().sum().matrix();
    beta.grad += dy.colwise().sum();
    const Eigen::Array<Scalar, 1, Eigen::Dynamic> scale = gamma.value.row(0).array() * inv_std_;
    if (!training_) return (dy.array().rowwise() * scale).matrix();
    const auto rows = static_cast<Scalar>(dy.rows());
    const Eigen::Array<Scalar, 1, Eigen::Dynamic> mean_dy = dy.colwise().sum().array() / rows;
    const Eigen::Array<Scalar, 1, Eigen::Dynamic> mean_dy_xhat =
        (dy.array() * xhat_.array()).colwise().sum() / rows;
    return (((dy.array().rowwise() - mean_dy) - (xhat_.array().rowwise() * mean_dy_xhat)).rowwise() * scale)
        .matrix();
  }

  std::vector<Param<Scalar>*> params() { return {&gamma, &beta, &running_mean, &running_var}; }

 private:
  double momentum_ = 0.1;
  double eps_ = 1e-5;
  bool training_ = false;
  Matrix<Scalar> xhat_;
  Eigen::Array<Scalar, 1, Eigen::Dynamic> inv_std_;
};

// Real 1-D convolution across time, "same" zero padding, stride 1. Weight
// rows are tap-major: row tap*C_in + c_in, one column per output channel.
template <typename Scalar>
class MixConv {
 public:
  Param<Scalar> weight, bias;

  MixConv() = default;
  MixConv(int in_channels, int out_channels, int kernel)
      : weight("mix.weight", static_cast<Eigen::Index>(kernel) * in_channels, out_channels),
        bias("mix.bias", 1, out_channels),
        in_(in_channels),
        kernel_(kernel) {
    if (kernel < 1 || kernel % 2 == 0) throw ConfigError("mixing kernel must be odd");
  }

  void init(std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_) * kernel_);
    detail::fill_uniform(weight.value, bound, rng);
    detail::fill_uniform(bias.value, bound, rng);
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& x, int length, int batch) const {
    detail::require(x.cols() == in_ && x.rows() == static_cast<Eigen::Index>(length) * batch,
                    "mixing convolution input shape mismatch");
    Matrix<Scalar> y(x.rows(), weight.value.cols());
    y.rowwise() = bias.value.row(0);
    const int half = (kernel_ - 1) / 2;
    for (int tap = 0; tap < kernel_; ++tap) {
      const int shift = tap - half;  // output t reads input t + shift
      const int t_lo = std::max(0, -shift);
      const int t_hi = std::min(length, length - shift);
      if (t_hi <= t_lo) continue;
      const Eigen::Index rows = static_cast<Eigen::Index>(t_hi - t_lo) * batch;
      y.middleRows(static_cast<Eigen::Index>(t_lo) * batch, rows).noalias() +=
          x.middleRows(static_cast<Eigen::Index>(t_lo + shift) * batch, rows) *
          weight.value.middleRows(static_cast<Eigen::Index>(tap) * in_, in_);
    }
    return y;
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& x, const Matrix<Scalar>& dy, int length, int batch) {
    detail::require(dy.rows() == x.rows() && dy.cols() == weight.value.cols(), "mixing cotangent shape mismatch");
    Matrix<Scalar> dx = Matrix<Scalar>::Zero(x.rows(), x.cols());
    bias.grad += dy.colwise().sum();
    const int half = (kernel_ - 1) / 2;
    for (int tap = 0; tap < kernel_; ++tap) {
      const int shift = tap - half;
      const int t_lo = std::max(0, -shift);
      const int t_hi = std::min(length, length - shift);
      if (t_hi <= t_lo) continue;
      const Eigen::Index rows = static_cast<Eigen::Index>(t_hi - t_lo) * batch;
      const auto out_block = dy.middleRows(static_cast<Eigen::Index>(t_lo) * batch, rows);
      const auto in_rows = static_cast<Eigen::Index>(t_lo + shift) * batch;
      weight.grad.middleRows(static_cast<Eigen::Index>(tap) * in_, in_).noalias() +=
          x.middleRows(in_rows, rows).transpose() * out_block;
      dx.middleRows(in_rows, rows).noalias() +=
          out_block * weight.value.middleRows(static_cast<Eigen::Index>(tap) * in_, in_).transpose();
    }
    return dx;
  }

  std::vector<Param<Scalar>*> params() { return {&weight, &bias}; }

 private:
  int in_ = 0;
  int kernel_ = 1;
};

// One GRU direction. Gate column blocks are ordered [update | reset |
// candidate]; both an input-side and a hidden-side bias are kept:
//   u = sig(x Wu + bu + h Uu + cu)
//   r = sig(x Wr + br + h Ur + cr)
//   c = tanh(x Wc + bc + r * (h Uc + cc))
//   h' = (1 - u) * c + u * h
template <typename Scalar>
class GruDirection {
 public:
  Param<Scalar> w_input, w_hidden, b_input, b_hidden;

  GruDirection() = default;
  GruDirection(const std::string& prefix, int in_channels, int hidden)
      : w_input(prefix + ".w_input", in_channels, 3 * hidden),
        w_hidden(prefix + ".w_hidden", hidden, 3 * hidden),
        b_input(prefix + ".b_input", 1, 3 * hidden),
        b_hidden(prefix + ".b_hidden", 1, 3 * hidden),
        hidden_(hidden) {}

  int hidden() const { return hidden_; }

  void init(std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_));
    for (auto* p : params()) detail::fill_uniform(p->value, bound, rng);
  }

  // Writes hidden states into columns [col, col + H) of `out`. A reversed
  // direction consumes time steps T-1 .. 0.
  void forward(const Matrix<Scalar>& x, int length, int batch, bool reversed, Matrix<Scalar>& out, Eigen::Index col) {
    const Eigen::Index h = hidden_;
    const Eigen::Index b = batch;
    reversed_ = reversed;
    Matrix<Scalar> gi = x * w_input.value;
    gi.rowwise() += b_input.value.row(0);
    update_.resize(x.rows(), h);
    reset_.resize(x.rows(), h);
    cand_.resize(x.rows(), h);
    hidden_cand_.resize(x.rows(), h);
    Matrix<Scalar> state = Matrix<Scalar>::Zero(b, h);
    Matrix<Scalar> gh(b, 3 * h);
    for (int step = 0; step < length; ++step) {
      const Eigen::Index row = static_cast<Eigen::Index>(reversed ? length - 1 - step : step) * b;
      gh.noalias() = state * w_hidden.value;
      gh.rowwise() += b_hidden.value.row(0);
      const auto gi_t = gi.middleRows(row, b);
      auto u = update_.middleRows(row, b);
      auto r = reset_.middleRows(row, b);
      auto c = cand_.middleRows(row, b);
      u = detail::sigmoid((gi_t.leftCols(h) + gh.leftCols(h)).array()).matrix();
      r = detail::sigmoid((gi_t.middleCols(h, h) + gh.middleCols(h, h)).array()).matrix();
      hidden_cand_.middleRows(row, b) = gh.rightCols(h);
      c = (gi_t.rightCols(h).array() + r.array() * gh.rightCols(h).array()).tanh().matrix();
      state = ((1 - u.array()) * c.array() + u.array() * state.array()).matrix();
      out.block(row, col, b, h) = state;
    }
  }

  // `out` is the full forward output (to recover previous states) and `dout`
  // its cotangent. Returns the gradient with respect to x.
  Matrix<Scalar> backward(const Matrix<Scalar>& x, const Matrix<Scalar>& out, const Matrix<Scalar>& dout,
                          int length, int batch, Eigen::Index col) {
    const Eigen::Index h = hidden_;
    const Eigen::Index b = batch;
    Matrix<Scalar> dgi(x.rows(), 3 * h);
    Matrix<Scalar> carry = Matrix<Scalar>::Zero(b, h);
    Matrix<Scalar> dgh(b, 3 * h);
    for (int step = length - 1; step >= 0; --step) {
      const int t = reversed_ ? length - 1 - step : step;
      const Eigen::Index row = static_cast<Eigen::Index>(t) * b;
      Matrix<Scalar> prev = Matrix<Scalar>::Zero(b, h);
      if (step > 0) {
        const int t_prev = reversed_ ? t + 1 : t - 1;
        prev = out.block(static_cast<Eigen::Index>(t_prev) * b, col, b, h);
      }
      const auto u = update_.middleRows(row, b).array();
      const auto r = reset_.middleRows(row, b).array();
      const auto c = cand_.middleRows(row, b).array();
      const auto ghc = hidden_cand_.middleRows(row, b).array();
      const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> dh =
          dout.block(row, col, b, h).array() + carry.array();
      const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> dc_pre = dh * (1 - u) * (1 - c.square());
      const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> du_pre = dh * (prev.array() - c) * u * (1 - u);
      const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> dr_pre = dc_pre * ghc * r * (1 - r);
      auto dgi_t = dgi.middleRows(row, b);
      dgi_t.leftCols(h) = du_pre.matrix();
      dgi_t.middleCols(h, h) = dr_pre.matrix();
      dgi_t.rightCols(h) = dc_pre.matrix();
      dgh.leftCols(h) = du_pre.matrix();
      dgh.middleCols(h, h) = dr_pre.matrix();
      dgh.rightCols(h) = (dc_pre * r).matrix();
      w_hidden.grad.noalias() += prev.transpose() * dgh;
      b_hidden.grad += dgh.colwise().sum();
      carry = (dh * u).matrix();
      carry.noalias() += dgh * w_hidden.value.transpose();
    }
    w_input.grad.noalias() += x.transpose() * dgi;
    b_input.grad += dgi.colwise().sum();
    return dgi * w_input.value.transpose();
  }

  std::vector<Param<Scalar>*> params() { return {&w_input, &w_hidden, &b_input, &b_hidden}; }

 private:
  int hidden_ = 0;
  bool reversed_ = false;
  Matrix<Scalar> update_, reset_, cand_, hidden_cand_;
};

// One-layer bidirectional GRU; output columns [forward H | backward H].
template <typename Scalar>
class BiGru {
 public:
  GruDirection<Scalar> fwd, bwd;

  BiGru() = default;
  BiGru(int in_channels, int hidden)
      : fwd("gru.fwd", in_channels, hidden), bwd("gru.bwd", in_channels, hidden), in_(in_channels) {}

  void init(std::mt19937_64& rng) {
    fwd.init(rng);
    bwd.init(rng);
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& x, int length, int batch) {
    detail::require(x.cols() == in_ && x.rows() == static_cast<Eigen::Index>(length) * batch,
                    "GRU input shape mismatch");
    Matrix<Scalar> out(x.rows(), 2 * fwd.hidden());
    fwd.forward(x, length, batch, false, out, 0);
    bwd.forward(x, length, batch, true, out, fwd.hidden());
    return out;
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& x, const Matrix<Scalar>& out, const Matrix<Scalar>& dout, int length,
                          int batch) {
    detail::require(dout.rows() == out.rows() && dout.cols() == out.cols(), "GRU cotangent shape mismatch");
    Matrix<Scalar> dx = fwd.backward(x, out, dout, length, batch, 0);
    dx += bwd.backward(x, out, dout, length, batch, fwd.hidden());
    return dx;
  }

  std::vector<Param<Scalar>*> params() {
    auto p = fwd.params();
    for (auto* q : bwd.params()) p.push_back(q);
    return p;
  }

 private:
  int in_ = 0;
};

// Additive attention pooling with scaled scores:
//   e_t = v . tanh(W h_t + b),  alpha = softmax_t(e / sqrt(A)),
//   pooled = sum_t alpha_t h_t
template <typename Scalar>
class AttentionPool {
 public:
  Param<Scalar> weight, bias, score;

  AttentionPool() = default;
  AttentionPool(int dim, int attn)
      : weight("attn.weight", dim, attn), bias("attn.bias", 1, attn), score("attn.score", 1, attn), attn_(attn) {}

  void init(std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(weight.value.rows()));
    detail::fill_uniform(weight.value, bound, rng);
    detail::fill_uniform(bias.value, bound, rng);
    detail::fill_uniform(score.value, 1.0 / std::sqrt(static_cast<double>(attn_)), rng);
  }

  Scalar scale() const { return Scalar(1) / std::sqrt(static_cast<Scalar>(attn_)); }

  // Attention weights of the last forward call, T x B.
  const Matrix<Scalar>& weights() const { return alpha_; }

  Matrix<Scalar> forward(const Matrix<Scalar>& hs, int length, int batch) {
    detail::require(hs.cols() == weight.value.rows() && hs.rows() == static_cast<Eigen::Index>(length) * batch,
                    "attention input shape mismatch");
    proj_ = hs * weight.value;
    proj_.rowwise() += bias.value.row(0);
    proj_ = proj_.array().tanh().matrix();
    const Matrix<Scalar> e = proj_ * score.value.transpose();  // (T*B) x 1
    alpha_ = Eigen::Map<const Matrix<Scalar>>(e.data(), length, batch) * scale();
    for (Eigen::Index b = 0; b < batch; ++b) {
      auto col = alpha_.col(b);
      const Scalar top = col.maxCoeff();
      col = (col.array() - top).exp().matrix();
      col /= col.sum();
    }
    Matrix<Scalar> pooled = Matrix<Scalar>::Zero(batch, hs.cols());
    for (int t = 0; t < length; ++t) {
      const auto block = hs.middleRows(static_cast<Eigen::Index>(t) * batch, batch);
      pooled += (block.array().colwise() * alpha_.row(t).transpose().array()).matrix();
    }
    return pooled;
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& hs, const Matrix<Scalar>& dpooled, int length, int batch) {
    detail::require(dpooled.rows() == batch && dpooled.cols() == hs.cols(), "attention cotangent shape mismatch");
    Matrix<Scalar> dhs(hs.rows(), hs.cols());
    Matrix<Scalar> dalpha(length, batch);
    for (int t = 0; t < length; ++t) {
      const auto row = static_cast<Eigen::Index>(t) * batch;
      const auto block = hs.middleRows(row, batch);
      dhs.middleRows(row, batch) = (dpooled.array().colwise() * alpha_.row(t).transpose().array()).matrix();
      dalpha.row(t) = (block.array() * dpooled.array()).rowwise().sum().transpose().matrix();
    }
    // softmax: ds = alpha * (dalpha - sum_t alpha dalpha)
    Matrix<Scalar> ds(length, batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const Scalar inner = alpha_.col(b).dot(dalpha.col(b));
      ds.col(b) = (alpha_.col(b).array() * (dalpha.col(b).array() - inner)).matrix() * scale();
    }
    const Eigen::Map<const Matrix<Scalar>> de(ds.data(), static_cast<Eigen::Index>(length) * batch, 1);
    score.grad.noalias() += de.transpose() * proj_;
    const Matrix<Scalar> dpre = ((de * score.value).array() * (1 - proj_.array().square())).matrix();
    weight.grad.noalias() += hs.transpose() * dpre;
    bias.grad += dpre.colwise().sum();
    dhs.noalias() += dpre * weight.value.transpose();
    return dhs;
  }

  std::vector<Param<Scalar>*> params() { return {&weight, &bias, &score}; }

 private:
  int attn_ = 1;
  Matrix<Scalar> proj_;   // tanh(W h + b), (T*B) x A
  Matrix<Scalar> alpha_;  // T x B
};

// Linear -> ReLU -> linear.
template <typename Scalar>
class MlpHead {
 public:
  Param<Scalar> w1, b1, w2, b2;

  MlpHead() = default;
  MlpHead(int in, int hidden, int classes)
      : w1("mlp.w1", in, hidden), b1("mlp.b1", 1, hidden), w2("mlp.w2", hidden, classes), b2("mlp.b2", 1, classes) {}

  void init(std::mt19937_64& rng) {
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(w1.value.rows()));
    detail::fill_uniform(w1.value, bound1, rng);
    detail::fill_uniform(b1.value, bound1, rng);
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(w2.value.rows()));
    detail::fill_uniform(w2.value, bound2, rng);
    detail::fill_uniform(b2.value, bound2, rng);
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& x) {
    detail::require(x.cols() == w1.value.rows(), "MLP input width mismatch");
    pre_ = x * w1.value;
    pre_.rowwise() += b1.value.row(0);
    act_ = pre_.cwiseMax(Scalar(0));
    Matrix<Scalar> logits = act_ * w2.value;
    logits.rowwise() += b2.value.row(0);
    return logits;
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& x, const Matrix<Scalar>& dlogits) {
    detail::require(dlogits.rows() == act_.rows() && dlogits.cols() == w2.value.cols(), "MLP cotangent mismatch");
    w2.grad.noalias() += act_.transpose() * dlogits;
    b2.grad += dlogits.colwise().sum();
    Matrix<Scalar> dpre = dlogits * w2.value.transpose();
    dpre = (dpre.array() * (pre_.array() > Scalar(0)).template cast<Scalar>()).matrix();
    w1.grad.noalias() += x.transpose() * dpre;
    b1.grad += dpre.colwise().sum();
    return dpre * w1.value.transpose();
  }

  std::vector<Param<Scalar>*> params() { return {&w1, &b1, &w2, &b2}; }

 private:
  Matrix<Scalar> pre_, act_;
};

}  // namespace cspm
