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
#include <cstdint>
#include <span>
#include <string>

#include "cspm/errors.hpp"
#include "cspm/tensor.hpp"

namespace cspm {

template <typename Scalar>
struct LossResult {
  double loss = 0.0;
  Matrix<Scalar> grad;  // d loss / d logits, B x C
};

// Mean softmax cross-entropy over the batch, max-subtracted for stability.
// The cotangent is (softmax - onehot) / B.
template <typename Scalar>
LossResult<Scalar> cross_entropy(const Matrix<Scalar>& logits, std::span<const std::uint32_t> labels) {
  const auto batch = logits.rows();
  const auto classes = logits.cols();
  if (static_cast<Eigen::Index>(labels.size()) != batch) throw ShapeError("label count does not match the batch");
  if (batch == 0) throw ShapeError("empty batch");
  LossResult<Scalar> out;
  out.grad.resize(batch, classes);
  double total = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto label = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(b)]);
    if (label >= classes) {
      throw ConfigError("label " + std::to_string(label) + " out of range for " + std::to_string(classes) +
                        " classes");
    }
    const Scalar top = logits.row(b).maxCoeff();
    double denom = 0.0;
    for (Eigen::Index c = 0; c < classes; ++c) denom += std::exp(static_cast<double>(logits(b, c) - top));
    const double log_denom = std::log(denom);
    total += log_denom - static_cast<double>(logits(b, label) - top);
    for (Eigen::Index c = 0; c < classes; ++c) {
      const double p = std::exp(static_cast<double>(logits(b, c) - top) - log_denom);
      out.grad(b, c) = static_cast<Scalar>((p - (c == label ? 1.0 : 0.0)) / static_cast<double>(batch));
    }
  }
  out.loss = total / static_cast<double>(batch);
  return out;
}

}  // namespace cspm
