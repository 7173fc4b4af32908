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
#include "cspm/tensor.hpp"

namespace cspm {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update of a single tensor; `step` counts from 1.
template <typename Scalar>
void adam_update(Matrix<Scalar>& value, const Matrix<Scalar>& grad, Matrix<Scalar>& m, Matrix<Scalar>& v,
                 long step, const AdamConfig& cfg) {
  if (step < 1) throw ConfigError("Adam step counter starts at 1");
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  const auto b1 = static_cast<Scalar>(cfg.beta1);
  const auto b2 = static_cast<Scalar>(cfg.beta2);
  m = b1 * m + (1 - b1) * grad;
  v = (b2 * v.array() + (1 - b2) * grad.array().square()).matrix();
  const auto lr = static_cast<Scalar>(cfg.learning_rate);
  const auto eps = static_cast<Scalar>(cfg.epsilon);
  const auto inv_c1 = static_cast<Scalar>(1.0 / c1);
  const auto inv_c2 = static_cast<Scalar>(1.0 / c2);
  value.array() -= lr * (m.array() * inv_c1) / ((v.array() * inv_c2).sqrt() + eps);
}

// Optimizer state for a fixed list of tensors. Frozen tensors and buffers
// are skipped and left bit-identical.
template <typename Scalar>
class Adam {
 public:
  explicit Adam(const AdamConfig& cfg = {}) : cfg_(cfg) {}

  long steps() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

  void step(const std::vector<Param<Scalar>*>& params) {
    if (m_.empty()) {
      for (auto* p : params) {
        m_.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
      }
    }
    if (m_.size() != params.size()) throw StateError("Adam state does not match the parameter list");
    for (const auto* p : params) {
      if (p->optimized() && !p->grad.allFinite()) {
        throw NumericError("non-finite gradient in tensor '" + p->name + "'");
      }
    }
    ++step_;
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto* p = params[k];
      if (!p->optimized()) continue;
      adam_update(p->value, p->grad, m_[k], v_[k], step_, cfg_);
    }
  }

 private:
  AdamConfig cfg_;
  long step_ = 0;
  std::vector<Matrix<Scalar>> m_, v_;
};

// Rescales all trainable gradients so their global L2 norm is at most
// max_norm. Returns the norm before clipping.
template <typename Scalar>
double clip_grad_norm(const std::vector<Param<Scalar>*>& params, double max_norm) {
  double sq = 0.0;
  for (const auto* p : params) {
    if (p->optimized()) sq += static_cast<double>(p->grad.squaredNorm());
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const auto s = static_cast<Scalar>(max_norm / norm);
    for (auto* p : params) {
      if (p->optimized()) p->grad *= s;
    }
  }
  return norm;
}

}  // namespace cspm
