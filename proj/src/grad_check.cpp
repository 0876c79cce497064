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

#include "irsn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace irsn {
GradCheckReport finite_diff_check(const std::function<Tensor()>& f, Tensor x, float step, float tol,
                                  const std::vector<int64_t>& indices, float floor, FdScheme scheme) {
  if (!(step > 0.0f)) throw std::invalid_argument("finite_diff_check: step must be positive");
  std::vector<int64_t> probe = indices;
  if (probe.empty()) {
    probe.resize(static_cast<size_t>(x.numel()));
    std::iota(probe.begin(), probe.end(), 0);
  }

  const bool had_flag = x.requires_grad();
  x.set_requires_grad(true);
  x.zero_grad();
  Tensor loss = f();
  if (loss.numel() != 1) throw ShapeError("finite_diff_check: f must be scalar-valued, got " + shape_str(loss.shape()));
  const float base = loss.item();
  loss.backward();

  {
    NoGradGuard no_grad;
    if (f().item() != base) throw std::runtime_error("finite_diff_check: f is not deterministic");
  }

  GradCheckReport report;
  report.analytic.reserve(probe.size());
  report.numeric.reserve(probe.size());
  auto values = x.data();
  for (int64_t i : probe) {
    report.analytic.push_back(x.has_grad() ? x.grad()[static_cast<size_t>(i)] : 0.0f);
    NoGradGuard no_grad;
    const float saved = values[static_cast<size_t>(i)];
    // Divide by the step actually realized in float, not the nominal one.
    int calls = 0;
    auto central = [&](float h) {
      calls += 2;
      const float hi = saved + h, lo = saved - h;
      values[static_cast<size_t>(i)] = hi;
      const double up = f().item();
      values[static_cast<size_t>(i)] = lo;
      const double down = f().item();
      values[static_cast<size_t>(i)] = saved;
      return (up - down) / (static_cast<double>(hi) - static_cast<double>(lo));
    };
    const double d1 = central(step);
    const double d = scheme == FdScheme::five_point ? (4.0 * d1 - central(2.0f * step)) / 3.0 : d1;
    report.numeric.push_back(static_cast<float>(d));
    report.evaluations.push_back(calls);
  }
  x.set_requires_grad(had_flag);

  float scale = floor;
  for (size_t k = 0; k < probe.size(); ++k) {
    scale = std::max({scale, std::abs(report.analytic[k]), std::abs(report.numeric[k])});
  }
  for (size_t k = 0; k < probe.size(); ++k) {
    const float err = std::abs(report.analytic[k] - report.numeric[k]) / scale;
    if (err > report.max_rel_error || report.worst_index < 0) {
      report.max_rel_error = err;
      report.worst_index = probe[k];
    }
  }
  report.passed = report.max_rel_error <= tol;
  return report;
}

}  // namespace irsn
