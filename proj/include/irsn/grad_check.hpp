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

#include <functional>
#include <string>
#include <vector>

#include "irsn/tensor.hpp"

namespace irsn {

enum class FdScheme { central, five_point };

struct GradCheckReport {
  float max_rel_error = 0.0f;
  int64_t worst_index = -1;
  std::vector<float> analytic;
  std::vector<float> numeric;
  std::vector<int> evaluations;  // calls of f per probed element
  bool passed = false;
};

/// Compares the reverse-mode gradient of scalar f at x against central
/// differences (f(x+h) - f(x-h)) / 2h, element by element.
///
/// The error of element i is |analytic_i - numeric_i| divided by the larger
/// of the two gradients' max-magnitudes (never below `floor`), so entries
/// that are near zero are judged on the gradient's own scale. `indices`
/// restricts the probe to a subset of elements (empty = all).
///
/// FdScheme::five_point also evaluates the doubled step and reports
/// (4 D(h) - D(2h)) / 3, cancelling the O(h^2) truncation term. f is then
/// called at x+h, x-h, x+2h, x-2h per element; `evaluations` records the count.
///
/// Throws std::runtime_error if two evaluations of f at the same point differ.
GradCheckReport finite_diff_check(const std::function<Tensor()>& f, Tensor x, float step = 1e-3f, float tol = 1e-3f,
                                  const std::vector<int64_t>& indices = {}, float floor = 1e-6f,
                                  FdScheme scheme = FdScheme::central);

}  // namespace irsn
