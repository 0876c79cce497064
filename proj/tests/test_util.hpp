/* Copyright 2026 The IRSN Authors. All Rights Reserved.

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
#include <random>
#include <span>
#include <vector>

#include "irsn/tensor.hpp"

namespace irsn::testing {

inline Tensor randn(Shape shape, std::mt19937_64& rng, bool requires_grad = false, float stddev = 1.0f) {
  std::normal_distribution<float> d(0.0f, stddev);
  std::vector<float> v(static_cast<size_t>(shape_numel(shape)));
  for (float& x : v) x = d(rng);
  return Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

// Values drawn away from zero, for inputs that feed a ReLU kink.
inline Tensor randn_away_from_zero(Shape shape, std::mt19937_64& rng, float margin, bool requires_grad = false) {
  std::normal_distribution<float> d(0.0f, 1.0f);
  std::vector<float> v(static_cast<size_t>(shape_numel(shape)));
  for (float& x : v) {
    do {
      x = d(rng);
    } while (std::abs(x) < margin);
  }
  return Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

inline std::vector<float> to_vec(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

inline float max_abs_diff(std::span<const float> a, std::span<const float> b) {
  float m = 0.0f;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace irsn::testing
