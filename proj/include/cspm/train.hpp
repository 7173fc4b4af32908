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
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "cspm/adam.hpp"
#include "cspm/checkpoint.hpp"
#include "cspm/dataset.hpp"
#include "cspm/errors.hpp"
#include "cspm/loss.hpp"
#include "cspm/model.hpp"
#include "cspm/rng.hpp"

namespace cspm {

inline constexpr std::size_t kDefaultParamBudget = 300000;

struct TrainConfig {
  int epochs = 50;
  std::size_t batch_size = 512;
  AdamConfig adam{};
  std::uint64_t seed = 42;
  std::size_t param_budget = kDefaultParamBudget;  // 0 disables the check
  double clip_norm = 0.0;                          // 0 disables clipping
  std::size_t eval_batch_size = 512;

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 2) throw ConfigError("batch size must be at least 2 (batch normalization)");
    if (!(adam.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (eval_batch_size < 1) throw ConfigError("evaluation batch size must be positive");
  }
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double seconds = 0.0;
  long steps = 0;  // cumulative optimizer steps
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 1-based; highest validation accuracy, earliest on ties

  long total_steps() const { return epochs.empty() ? 0 : epochs.back().steps; }
};

template <typename Scalar>
using ParamSnapshot = std::vector<Matrix<Scalar>>;

template <typename Scalar>
ParamSnapshot<Scalar> snapshot(const Model<Scalar>& model) {
  ParamSnapshot<Scalar> out;
  for (const auto* p : model.params()) out.push_back(p->value);
  return out;
}

template <typename Scalar>
void restore(Model<Scalar>& model, const ParamSnapshot<Scalar>& snap) {
  auto params = model.params();
  if (params.size() != snap.size()) throw StateError("snapshot does not match the model");
  for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = snap[k];
}

struct LossAccuracy {
  double loss = 0.0;
  double accuracy = 0.0;
  std::size_t count = 0;
};

// Eval-mode mean loss and accuracy over a whole dataset.
template <typename Scalar>
LossAccuracy evaluate_loss_accuracy(Model<Scalar>& model, const Dataset& ds, std::size_t batch_size = 512) {
  LossAccuracy out;
  if (ds.size() == 0) {
    out.loss = std::numeric_limits<double>::quiet_NaN();
    out.accuracy = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  std::vector<std::uint32_t> labels;
  for (std::size_t start = 0; start < ds.size(); start += batch_size) {
    idx.clear();
    labels.clear();
    for (std::size_t k = start; k < std::min(ds.size(), start + batch_size); ++k) {
      idx.push_back(k);
      labels.push_back(ds.examples[k].label);
    }
    const auto logits = model.forward(make_batch<Scalar>(ds, idx), false);
    const auto ce = cross_entropy<Scalar>(logits, labels);
    loss_sum += ce.loss * static_cast<double>(idx.size());
    for (Eigen::Index b = 0; b < logits.rows(); ++b) {
      if (argmax_row(logits.row(b)) == static_cast<int>(labels[static_cast<std::size_t>(b)])) ++correct;
    }
  }
  model.release_cache();
  out.count = ds.size();
  out.loss = loss_sum / static_cast<double>(ds.size());
  out.accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());
  return out;
}

template <typename Scalar>
struct TrainResult {
  TrainHistory history;
  ParamSnapshot<Scalar> best;  // parameters at history.best_epoch
};

// Full-batch-norm training with Adam. Each epoch visits the training set in
// an order drawn from (seed, epoch); examples inside a batch are processed in
// that order, so repeated runs produce identical parameters. On return the
// model holds the last-epoch parameters.
template <typename Scalar>
TrainResult<Scalar> train(Model<Scalar>& model, const Dataset& train_set, const Dataset& val_set,
                          const TrainConfig& cfg,
                          const std::function<void(const EpochRecord&)>& on_epoch = nullptr) {
  cfg.validate();
  const std::size_t params = model.count_params();
  if (cfg.param_budget > 0 && params > cfg.param_budget) {
    throw ConfigError("parameter budget exceeded: model has " + std::to_string(params) +
                      " trainable parameters, budget is " + std::to_string(cfg.param_budget));
  }
  if (train_set.size() == 0) throw ConfigError("training set is empty");
  if (static_cast<int>(train_set.num_classes()) != model.config().classes) {
    throw ConfigError("dataset class count does not match the model");
  }
  if (train_set.length != static_cast<std::size_t>(model.config().length)) {
    throw ShapeError("dataset sample length does not match the model");
  }

  TrainResult<Scalar> result;
  Adam<Scalar> opt(cfg.adam);
  double best_acc = -1.0;
  std::vector<std::size_t> order(train_set.size());
  std::vector<std::size_t> idx;
  std::vector<std::uint32_t> labels;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(cfg.seed, {0xE90C4ull, static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      idx.assign(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(stop));
      labels.clear();
      for (auto k : idx) labels.push_back(train_set.examples[k].label);
      model.zero_grad();
      const auto logits = model.forward(make_batch<Scalar>(train_set, idx), true);
      const auto ce = cross_entropy<Scalar>(logits, labels);
      if (!std::isfinite(ce.loss)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      model.backward(ce.grad);
      auto plist = model.params();
      if (cfg.clip_norm > 0.0) clip_grad_norm(plist, cfg.clip_norm);
      opt.step(plist);
      loss_sum += ce.loss * static_cast<double>(idx.size());
    }
    model.release_cache();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_set.size());
    const auto val = evaluate_loss_accuracy(model, val_set, cfg.eval_batch_size);
    rec.val_loss = val.loss;
    rec.val_acc = val.accuracy;
    rec.steps = opt.steps();
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.epochs.push_back(rec);
    const double acc = val.count ? val.accuracy : 0.0;
    if (acc > best_acc || (val.count == 0)) {
      best_acc = acc;
      result.history.best_epoch = epoch;
      result.best = snapshot(model);
    }
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

inline std::string format_history_csv(const TrainHistory& h) {
  std::string out = "epoch,train_loss,val_loss,val_acc,seconds\n";
  char line[256];
  for (const auto& r : h.epochs) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.3f\n", r.epoch, r.train_loss, r.val_loss, r.val_acc,
                  r.seconds);
    out += line;
  }
  return out;
}

inline void write_history_csv(const TrainHistory& h, const std::filesystem::path& path) {
  const auto text = format_history_csv(h);
  detail::write_file_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

// ---------------------------------------------------------------------------
// Finite-difference gradient verification.

struct GradGroupReport {
  std::string name;
  std::size_t count = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradGroupReport> groups;
  double tolerance = 0.0;

  double max_rel_error() const {
    double m = 0.0;
    for (const auto& g : groups) m = std::max(m, g.max_rel_error);
    return m;
  }
  bool passed() const {
    for (const auto& g : groups) {
      if (!(g.max_rel_error < tolerance)) return false;
    }
    return !groups.empty();
  }
};

// Relative error |a - n| / max(|a|, |n|, floor). The floor keeps entries
// whose true gradient is ~0 from dividing rounding noise by ~0.
inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Central differences of `loss` against the analytic gradients in `grads`
// (same order as `params`, which are perturbed in place and restored).
inline GradCheckReport check_gradients(const std::function<double()>& loss, const std::vector<Param<double>*>& params,
                                       const std::vector<Matrix<double>>& grads, double step, double tolerance,
                                       double floor) {
  GradCheckReport report;
  report.tolerance = tolerance;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto* p = params[k];
    GradGroupReport g;
    g.name = p->name;
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& theta = p->value.data()[i];
      const double saved = theta;
      theta = saved + step;
      const double up = loss();
      theta = saved - step;
      const double down = loss();
      theta = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = grads[k].data()[i];
      g.max_abs_error = std::max(g.max_abs_error, std::abs(analytic - numeric));
      g.max_rel_error = std::max(g.max_rel_error, relative_error(analytic, numeric, floor));
      ++g.count;
    }
    report.groups.push_back(g);
  }
  return report;
}

enum class Precision { f32, f64 };

struct GradCheckOptions {
  Precision precision = Precision::f64;
  double step = 1e-5;
  double tolerance = 1e-6;
  double floor = 1e-4;
  int batch = 3;
  std::uint64_t seed = 7;
  bool inject_fault = false;
};

// The tiny configuration used for gradient verification.
inline ModelConfig tiny_model_config(Variant variant = Variant::full) {
  ModelConfig c;
  c.variant = variant;
  c.length = 16;
  c.subbands = 2;
  c.kernel = 5;
  c.mix_channels = 4;
  c.hidden = 3;
  c.attention = 4;
  c.mlp_hidden = 5;
  c.classes = 3;
  c.seed = 11;
  return c;
}

// Checks analytic gradients of the full composed loss (train-mode forward,
// mean cross-entropy) against central finite differences. The f32 mode
// verifies the single-precision backward pass against differences taken on
// an identical double-precision model.
inline GradCheckReport grad_check(const ModelConfig& cfg, const GradCheckOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SignalBatch<double> x{Matrix<double>(opt.batch, cfg.length), Matrix<double>(opt.batch, cfg.length)};
  for (Eigen::Index k = 0; k < x.real.size(); ++k) x.real.data()[k] = static_cast<float>(gauss(rng));
  for (Eigen::Index k = 0; k < x.imag.size(); ++k) x.imag.data()[k] = static_cast<float>(gauss(rng));
  std::vector<std::uint32_t> labels(static_cast<std::size_t>(opt.batch));
  for (auto& l : labels) l = static_cast<std::uint32_t>(rng() % static_cast<std::uint64_t>(cfg.classes));

  Model<double> reference(cfg);
  std::vector<Matrix<double>> grads;
  if (opt.precision == Precision::f64) {
    reference.set_fault_injection(opt.inject_fault);
    reference.zero_grad();
    const auto ce = cross_entropy<double>(reference.forward(x, true), labels);
    reference.backward(ce.grad);
    reference.set_fault_injection(false);
    for (auto* p : reference.params()) grads.push_back(p->grad);
  } else {
    Model<float> single(cfg);
    copy_parameters(single, reference);
    single.set_fault_injection(opt.inject_fault);
    SignalBatch<float> xf{x.real.cast<float>(), x.imag.cast<float>()};
    single.zero_grad();
    const auto ce = cross_entropy<float>(single.forward(xf, true), labels);
    single.backward(ce.grad);
    for (auto* p : single.params()) grads.push_back(p->grad.cast<double>());
  }

  std::vector<Param<double>*> checked;
  std::vector<Matrix<double>> checked_grads;
  auto all = reference.params();
  for (std::size_t k = 0; k < all.size(); ++k) {
    if (all[k]->optimized()) {
      checked.push_back(all[k]);
      checked_grads.push_back(grads[k]);
    }
  }
  auto loss = [&]() { return cross_entropy<double>(reference.forward(x, true), labels).loss; };
  return check_gradients(loss, checked, checked_grads, opt.step, opt.tolerance, opt.floor);
}

}  // namespace cspm
