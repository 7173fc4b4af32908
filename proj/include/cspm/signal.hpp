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
#include <complex>
#include <cstddef>
#include <vector>

#include "cspm/errors.hpp"

namespace cspm {

// Length-T complex baseband record stored as planar I and Q arrays.
// Samples are kept in f32, the precision of the on-disk container.
struct ComplexSequence {
  std::vector<float> i;
  std::vector<float> q;

  ComplexSequence() = default;
  explicit ComplexSequence(std::size_t length) : i(length, 0.0f), q(length, 0.0f) {}

  std::size_t size() const noexcept { return i.size(); }

  std::complex<double> at(std::size_t n) const { return {i[n], q[n]}; }

  void validate() const {
    if (i.size() != q.size()) throw ShapeError("I and Q arrays differ in length");
    if (i.empty()) throw ShapeError("sequence length must be positive");
    for (std::size_t n = 0; n < i.size(); ++n) {
      if (!std::isfinite(i[n]) || !std::isfinite(q[n])) {
        throw NumericError("non-finite sample at index " + std::to_string(n));
      }
    }
  }

  bool operator==(const ComplexSequence&) const = default;
};

inline ComplexSequence to_sequence(const std::vector<std::complex<double>>& samples) {
  ComplexSequence out(samples.size());
  for (std::size_t n = 0; n < samples.size(); ++n) {
    out.i[n] = static_cast<float>(samples[n].real());
    out.q[n] = static_cast<float>(samples[n].imag());
  }
  return out;
}

inline std::vector<std::complex<double>> to_complex(const ComplexSequence& x) {
  std::vector<std::complex<double>> out(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) out[n] = x.at(n);
  return out;
}

inline double mean_power(const ComplexSequence& x) {
  double acc = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    acc += static_cast<double>(x.i[n]) * x.i[n] + static_cast<double>(x.q[n]) * x.q[n];
  }
  return x.size() ? acc / static_cast<double>(x.size()) : 0.0;
}

}  // namespace cspm
