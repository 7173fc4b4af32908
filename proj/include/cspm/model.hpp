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
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cspm/dataset.hpp"
#include "cspm/errors.hpp"
#include "cspm/frontend.hpp"
#include "cspm/layers.hpp"
#include "cspm/phase_motion.hpp"
#include "cspm/rng.hpp"
#include "cspm/tensor.hpp"
#include "json.hpp"

namespace cspm {

enum class Variant { full, phase_motion_only, fixed_morlet, learnable_morlet };

inline constexpr std::array<Variant, 4> kAllVariants = {Variant::full, Variant::phase_motion_only,
                                                        Variant::fixed_morlet, Variant::learnable_morlet};

inline std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::phase_motion_only: return "phase_motion_only";
    case Variant::fixed_morlet: return "fixed_morlet";
    case Variant::learnable_morlet: return "learnable_morlet";
  }
  return "?";
}

inline Variant parse_variant(std::string_view name) {
  for (auto v : kAllVariants) {
    if (variant_name(v) == name) return v;
  }
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

struct ModelConfig {
  Variant variant = Variant::full;
  int length = 128;
  int subbands = 8;
  int kernel = 33;
  std::vector<int> lags{1, 2, 4, 8};
  int mix_channels = 64;
  int mix_kernel = 3;
  int hidden = 128;
  int attention = 64;
  int mlp_hidden = 128;
  int classes = 11;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  std::uint64_t seed = 42;

  // phase_motion_only feeds the raw input through as a single subband.
  int effective_subbands() const { return variant == Variant::phase_motion_only ? 1 : subbands; }
  int feature_channels() const { return feature_channel_count(effective_subbands(), static_cast<int>(lags.size())); }

  void validate() const {
    if (length < 1) throw ConfigError("length must be positive");
    if (subbands < 1) throw ConfigError("subband count must be positive");
    if (kernel < 1 || kernel % 2 == 0) throw ConfigError("filter length must be odd");
    if (variant != Variant::phase_motion_only && kernel > length) {
      throw ConfigError("filter length exceeds the sequence length");
    }
    LagSet{lags}.validate(length);
    if (mix_channels < 1 || hidden < 1 || attention < 1 || mlp_hidden < 1) {
      throw ConfigError("layer sizes must be positive");
    }
    if (mix_kernel < 1 || mix_kernel % 2 == 0) throw ConfigError("mixing kernel must be odd");
    if (classes < 1) throw ConfigError("class count must be positive");
    if (!(bn_eps > 0.0)) throw ConfigError("batch-norm epsilon must be positive");
    if (!(bn_momentum >= 0.0 && bn_momentum <= 1.0)) throw ConfigError("batch-norm momentum must be in [0, 1]");
  }

  bool operator==(const ModelConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"variant", std::string(variant_name(c.variant))},
                     {"length", c.length},
                     {"subbands", c.subbands},
                     {"kernel", c.kernel},
                     {"lags", c.lags},
                     {"mix_channels", c.mix_channels},
                     {"mix_kernel", c.mix_kernel},
                     {"hidden", c.hidden},
                     {"attention", c.attention},
                     {"mlp_hidden", c.mlp_hidden},
                     {"classes", c.classes},
                     {"bn_momentum", c.bn_momentum},
                     {"bn_eps", c.bn_eps},
                     {"seed", c.seed},
                     {"padding", "zero"},
                     {"orientation", "correlation"},
                     {"free_init", "uniform(+-1/sqrt(S*K))"}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  try {
    c.variant = parse_variant(j.at("variant").get<std::string>());
    j.at("length").get_to(c.length);
    j.at("subbands").get_to(c.subbands);
    j.at("kernel").get_to(c.kernel);
    j.at("lags").get_to(c.lags);
    j.at("mix_channels").get_to(c.mix_channels);
    j.at("mix_kernel").get_to(c.mix_kernel);
    j.at("hidden").get_to(c.hidden);
    j.at("attention").get_to(c.attention);
    j.at("mlp_hidden").get_to(c.mlp_hidden);
    j.at("classes").get_to(c.classes);
    j.at("bn_momentum").get_to(c.bn_momentum);
    j.at("bn_eps").get_to(c.bn_eps);
    j.at("seed").get_to(c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
}

// Index of the largest score; ties resolve to the lowest index.
template <typename Derived>
int argmax_row(const Eigen::MatrixBase<Derived>& row) {
  int best = 0;
  for (Eigen::Index k = 1; k < row.size(); ++k) {
    if (row(k) > row(best)) best = static_cast<int>(k);
  }
  return best;
}

template <typename Scalar>
SignalBatch<Scalar> make_batch(const Dataset& ds, std::span<const std::size_t> indices) {
  const auto length = static_cast<Eigen::Index>(ds.length);
  const auto count = static_cast<Eigen::Index>(indices.size());
  SignalBatch<Scalar> batch{Matrix<Scalar>(count, length), Matrix<Scalar>(count, length)};
  for (Eigen::Index b = 0; b < count; ++b) {
    const auto& sig = ds.examples.at(indices[static_cast<std::size_t>(b)]).signal;
    for (Eigen::Index n = 0; n < length; ++n) {
      batch.real(b, n) = static_cast<Scalar>(sig.i[static_cast<std::size_t>(n)]);
      batch.imag(b, n) = static_cast<Scalar>(sig.q[static_cast<std::size_t>(n)]);
    }
  }
  return batch;
}

// Complex subband front end -> phase-motion features -> batch norm ->
// mixing convolution -> bidirectional GRU -> attention pooling -> MLP.
template <typename Scalar>
class Model {
 public:
  explicit Model(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const int feat = cfg_.feature_channels();
    switch (cfg_.variant) {
      case Variant::full:
        bank_ = make_free_bank<Scalar>(cfg_.subbands, cfg_.kernel, derive_seed(cfg_.seed, {0}));
        frontend_a_ = Param<Scalar>("frontend.w_real", cfg_.subbands, cfg_.kernel);
        frontend_b_ = Param<Scalar>("frontend.w_imag", cfg_.subbands, cfg_.kernel);
        frontend_a_.value = bank_.w_real;
        frontend_b_.value = bank_.w_imag;
        break;
      case Variant::fixed_morlet:
      case Variant::learnable_morlet: {
        const bool learn = cfg_.variant == Variant::learnable_morlet;
        bank_ = make_morlet_bank<Scalar>(cfg_.subbands, cfg_.kernel,
                                         learn ? FilterParameterization::learnable_morlet
                                               : FilterParameterization::fixed_morlet);
        frontend_a_ = Param<Scalar>("frontend.center_freq", 1, cfg_.subbands, learn);
        frontend_b_ = Param<Scalar>("frontend.bandwidth", 1, cfg_.subbands, learn);
        for (int s = 0; s < cfg_.subbands; ++s) {
          frontend_a_.value(0, s) = bank_.center_freqs[s];
          frontend_b_.value(0, s) = bank_.bandwidths[s];
        }
        break;
      }
      case Variant::phase_motion_only:
        break;
    }
    bn_ = BatchNorm1d<Scalar>(feat, cfg_.bn_momentum, cfg_.bn_eps);
    mix_ = MixConv<Scalar>(feat, cfg_.mix_channels, cfg_.mix_kernel);
    gru_ = BiGru<Scalar>(cfg_.mix_channels, cfg_.hidden);
    attn_ = AttentionPool<Scalar>(2 * cfg_.hidden, cfg_.attention);
    mlp_ = MlpHead<Scalar>(2 * cfg_.hidden, cfg_.mlp_hidden, cfg_.classes);
    std::mt19937_64 rng(derive_seed(cfg_.seed, {1}));
    mix_.init(rng);
    gru_.init(rng);
    attn_.init(rng);
    mlp_.init(rng);
  }

  Model(const Model&) = default;
  Model& operator=(const Model&) = default;

  const ModelConfig& config() const { return cfg_; }
  bool has_frontend() const { return cfg_.variant != Variant::phase_motion_only; }

  // Tensors in checkpoint order, including non-trainable ones.
  std::vector<Param<Scalar>*> params() {
    std::vector<Param<Scalar>*> out;
    if (has_frontend()) {
      out.push_back(&frontend_a_);
      out.push_back(&frontend_b_);
    }
    for (auto* p : bn_.params()) out.push_back(p);
    for (auto* p : mix_.params()) out.push_back(p);
    for (auto* p : gru_.params()) out.push_back(p);
    for (auto* p : attn_.params()) out.push_back(p);
    for (auto* p : mlp_.params()) out.push_back(p);
    return out;
  }
  std::vector<const Param<Scalar>*> params() const {
    auto mut = const_cast<Model*>(this)->params();
    return {mut.begin(), mut.end()};
  }

  // Number of trainable scalars.
  std::size_t count_params() const {
    std::size_t n = 0;
    for (const auto* p : params()) {
      if (p->optimized()) n += static_cast<std::size_t>(p->size());
    }
    return n;
  }

  void zero_grad() {
    for (auto* p : params()) p->zero_grad();
  }

  // Filter bank as used by the next forward pass.
  const ComplexFilterBank<Scalar>& bank() {
    sync_bank();
    return bank_;
  }
  const AttentionPool<Scalar>& attention() const { return attn_; }

  // Phase-motion feature map of one example, before batch normalization.
  FeatureMap<Scalar> features(std::span<const Scalar> x_real, std::span<const Scalar> x_imag) {
    if (static_cast<int>(x_real.size()) != cfg_.length || x_imag.size() != x_real.size()) {
      throw ShapeError("input length does not match the configured length");
    }
    sync_bank();
    SubbandResponse<Scalar> z;
    if (has_frontend()) {
      z = complex_conv_forward<Scalar>(x_real, x_imag, bank_);
    } else {
      z.real = Eigen::Map<const Matrix<Scalar>>(x_real.data(), 1, cfg_.length);
      z.imag = Eigen::Map<const Matrix<Scalar>>(x_imag.data(), 1, cfg_.length);
    }
    return phase_motion_features(z, LagSet{cfg_.lags});
  }

  // Drops cached activations of the last forward pass.
  void release_cache() { cache_ = Cache{}; }

  // Test hook: flips the sign of one gradient group after every backward pass.
  void set_fault_injection(bool on) { inject_fault_ = on; }

  Matrix<Scalar> forward(const SignalBatch<Scalar>& x, bool training) {
    if (x.length() != cfg_.length) {
      throw ShapeError("input length " + std::to_string(x.length()) + " does not match the configured length " +
                       std::to_string(cfg_.length));
    }
    if (x.batch() < 1 || x.imag.rows() != x.batch() || x.imag.cols() != x.length()) {
      throw ShapeError("malformed input batch");
    }
    const int batch = static_cast<int>(x.batch());
    const int length = cfg_.length;
    const LagSet lags{cfg_.lags};
    sync_bank();
    cache_ = Cache{};
    cache_.input = x;
    cache_.batch = batch;
    cache_.responses.reserve(static_cast<std::size_t>(batch));
    const int feat = cfg_.feature_channels();
    cache_.features.resize(static_cast<Eigen::Index>(length) * batch, feat);
    for (int b = 0; b < batch; ++b) {
      SubbandResponse<Scalar> z;
      if (has_frontend()) {
        z = complex_conv_forward<Scalar>(row_span(x.real, b), row_span(x.imag, b), bank_);
      } else {
        z.real = x.real.row(b);
        z.imag = x.imag.row(b);
      }
      const auto fm = phase_motion_features(z, lags);
      for (int t = 0; t < length; ++t) {
        cache_.features.row(static_cast<Eigen::Index>(t) * batch + b) = fm.channels.col(t).transpose();
      }
      cache_.responses.push_back(std::move(z));
    }
    cache_.normed = bn_.forward(cache_.features, training);
    cache_.mixed = mix_.forward(cache_.normed, length, batch);
    cache_.recurrent = gru_.forward(cache_.mixed, length, batch);
    cache_.pooled = attn_.forward(cache_.recurrent, length, batch);
    cache_.valid = true;
    return mlp_.forward(cache_.pooled);
  }

  // Accumulates parameter gradients for the last forward pass. Returns the
  // input gradient when requested (empty batch otherwise).
  SignalBatch<Scalar> backward(const Matrix<Scalar>& dlogits, bool want_input_grad = false) {
    if (!cache_.valid) throw StateError("backward() called without a preceding forward()");
    if (dlogits.rows() != cache_.batch || dlogits.cols() != cfg_.classes) {
      throw ShapeError("logit cotangent shape mismatch");
    }
    const int batch = cache_.batch;
    const int length = cfg_.length;
    const LagSet lags{cfg_.lags};
    const Matrix<Scalar> dpooled = mlp_.backward(cache_.pooled, dlogits);
    const Matrix<Scalar> drec = attn_.backward(cache_.recurrent, dpooled, length, batch);
    const Matrix<Scalar> dmixed = gru_.backward(cache_.mixed, cache_.recurrent, drec, length, batch);
    const Matrix<Scalar> dnormed = mix_.backward(cache_.normed, dmixed, length, batch);
    const Matrix<Scalar> dfeat = bn_.backward(dnormed);

    SignalBatch<Scalar> dx;
    if (want_input_grad) {
      dx.real = Matrix<Scalar>::Zero(batch, length);
      dx.imag = Matrix<Scalar>::Zero(batch, length);
    }
    const bool tap_grads = cfg_.variant == Variant::full || cfg_.variant == Variant::learnable_morlet;
    if (want_input_grad || tap_grads) {
      Matrix<Scalar> gw_real = Matrix<Scalar>::Zero(bank_.subbands(), bank_.taps());
      Matrix<Scalar> gw_imag = Matrix<Scalar>::Zero(bank_.subbands(), bank_.taps());
      const int feat = cfg_.feature_channels();
      Matrix<Scalar> grad_map(feat, length);
      for (int b = 0; b < batch; ++b) {
        for (int t = 0; t < length; ++t) {
          grad_map.col(t) = dfeat.row(static_cast<Eigen::Index>(t) * batch + b).transpose();
        }
        const auto dz = phase_motion_backward(cache_.responses[static_cast<std::size_t>(b)], lags, grad_map);
        if (!has_frontend()) {
          dx.real.row(b) = dz.real;
          dx.imag.row(b) = dz.imag;
          continue;
        }
        std::span<Scalar> gx_r, gx_i;
        if (want_input_grad) {
          gx_r = std::span<Scalar>(dx.real.row(b).data(), static_cast<std::size_t>(length));
          gx_i = std::span<Scalar>(dx.imag.row(b).data(), static_cast<std::size_t>(length));
        }
        complex_conv_backward_accumulate<Scalar>(row_span(cache_.input.real, b), row_span(cache_.input.imag, b),
                                                 bank_, dz, gx_r, gx_i, tap_grads ? &gw_real : nullptr,
                                                 tap_grads ? &gw_imag : nullptr);
      }
      if (cfg_.variant == Variant::full) {
        frontend_a_.grad += gw_real;
        frontend_b_.grad += gw_imag;
      } else if (cfg_.variant == Variant::learnable_morlet) {
        const auto g = morlet_backward(bank_, gw_real, gw_imag);
        for (int s = 0; s < cfg_.subbands; ++s) {
          frontend_a_.grad(0, s) += g.center_freqs[s];
          frontend_b_.grad(0, s) += g.bandwidths[s];
        }
      }
    }
    if (inject_fault_) mix_.bias.grad = -mix_.bias.grad;
    cache_.valid = false;
    return dx;
  }

 private:
  struct Cache {
    bool valid = false;
    int batch = 0;
    SignalBatch<Scalar> input;
    std::vector<SubbandResponse<Scalar>> responses;
    Matrix<Scalar> features, normed, mixed, recurrent, pooled;
  };

  static std::span<const Scalar> row_span(const Matrix<Scalar>& m, int row) {
    return {m.row(row).data(), static_cast<std::size_t>(m.cols())};
  }

  void sync_bank() {
    switch (cfg_.variant) {
      case Variant::full:
        bank_.w_real = frontend_a_.value;
        bank_.w_imag = frontend_b_.value;
        break;
      case Variant::fixed_morlet:
      case Variant::learnable_morlet:
        for (int s = 0; s < cfg_.subbands; ++s) {
          bank_.center_freqs[s] = frontend_a_.value(0, s);
          bank_.bandwidths[s] = frontend_b_.value(0, s);
        }
        regenerate_morlet_taps(bank_);
        break;
      case Variant::phase_motion_only:
        break;
    }
  }

  ModelConfig cfg_;
  ComplexFilterBank<Scalar> bank_;
  Param<Scalar> frontend_a_, frontend_b_;
  BatchNorm1d<Scalar> bn_;
  MixConv<Scalar> mix_;
  BiGru<Scalar> gru_;
  AttentionPool<Scalar> attn_;
  MlpHead<Scalar> mlp_;
  Cache cache_;
  bool inject_fault_ = false;
};

// Copies every tensor value between models of identical configuration,
// converting precision.
template <typename From, typename To>
void copy_parameters(const Model<From>& src, Model<To>& dst) {
  if (!(src.config() == dst.config())) throw ConfigError("cannot copy parameters between different configurations");
  const auto from = src.params();
  auto to = dst.params();
  for (std::size_t k = 0; k < from.size(); ++k) to[k]->value = from[k]->value.template cast<To>();
}

template <typename Scalar>
std::vector<int> predict(Model<Scalar>& model, const Dataset& ds, std::size_t batch_size = 512) {
  std::vector<int> out;
  out.reserve(ds.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < ds.size(); start += batch_size) {
    idx.clear();
    for (std::size_t k = start; k < std::min(ds.size(), start + batch_size); ++k) idx.push_back(k);
    const auto logits = model.forward(make_batch<Scalar>(ds, idx), false);
    for (Eigen::Index b = 0; b < logits.rows(); ++b) out.push_back(argmax_row(logits.row(b)));
  }
  return out;
}

}  // namespace cspm
