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

#include <doctest.h>

#include <random>

#include "grad_suite.hpp"
#include "irsn/grad_check.hpp"
#include "irsn/ops.hpp"

using namespace irsn;
using namespace irsn::testing;

TEST_SUITE("grad_check") {
  TEST_CASE("sum of squares at [1,2]") {
    Tensor x = Tensor::from_data({2}, {1, 2}, true);
    GradCheckReport r = finite_diff_check([&] { return sum(mul(x, x)); }, x);
    CHECK(r.analytic == std::vector<float>{2, 4});
    CHECK(r.numeric[0] == doctest::Approx(2.0f).epsilon(1e-3));
    CHECK(r.numeric[1] == doctest::Approx(4.0f).epsilon(1e-3));
    CHECK(r.passed);
  }

  TEST_CASE("five-point stencil removes the cubic truncation term") {
    Tensor x = Tensor::from_data({1}, {0.5f}, true);
    auto f = [&] { return sum(mul(mul(x, x), x)); };
    const GradCheckReport plain = finite_diff_check(f, x, 0.1f);
    CHECK(plain.numeric[0] == doctest::Approx(0.76f).epsilon(1e-5));
    CHECK(plain.evaluations == std::vector<int>{2});
    const GradCheckReport five = finite_diff_check(f, x, 0.1f, 1e-3f, {}, 1e-6f, FdScheme::five_point);
    CHECK(five.numeric[0] == doctest::Approx(0.75f).epsilon(1e-5));
    CHECK(five.evaluations == std::vector<int>{4});
  }

  TEST_CASE("linear f is exact up to rounding") {
    Tensor x = Tensor::from_data({3}, {0.25f, -0.5f, 1.0f}, true);
    GradCheckReport r = finite_diff_check([&] { return scale(sum(x), 2.0f); }, x);
    CHECK(r.max_rel_error < 1e-4f);
  }

  TEST_CASE("sigmoid sum at zero has gradient one quarter") {
    Tensor x = Tensor::zeros({4}, true);
    GradCheckReport r = finite_diff_check([&] { return sum(sigmoid(x)); }, x);
    for (float g : r.analytic) CHECK(g == doctest::Approx(0.25f));
    CHECK(r.passed);
  }

  TEST_CASE("a wrong backward rule is caught") {
    Tensor x = Tensor::from_data({2}, {1.0f, 3.0f}, true);
    // d/dx of x*x.detach() is only half the true derivative.
    GradCheckReport r = finite_diff_check([&] { return sum(mul(x, x.detach())); }, x);
    CHECK_FALSE(r.passed);
  }

  TEST_CASE("non-deterministic f is rejected") {
    Tensor x = Tensor::from_data({2}, {1.0f, 2.0f}, true);
    int calls = 0;
    CHECK_THROWS_AS(finite_diff_check([&] { return scale(sum(x), static_cast<float>(++calls)); }, x), std::runtime_error);
  }

  TEST_CASE("three-layer MLP gradients") {
    std::mt19937_64 rng(21);
    Linear l1(5, 6, rng), l2(6, 6, rng), l3(6, 2, rng);
    Tensor x = randn({3, 5}, rng);
    Tensor r = randn({3, 2}, rng);
    auto f = [&] { return project(l3.forward(gelu(l2.forward(gelu(l1.forward(x))))), r); };
    for (const Tensor& w : {l1.weight, l2.weight, l3.weight, l1.bias}) {
      CHECK(finite_diff_check(f, w).max_rel_error < 1e-3f);
    }
  }
}

TEST_SUITE("grad_check.ops") {
  TEST_CASE("every op case passes on three trials") {
    std::mt19937_64 rng(22);
    for (const GradCase& c : gradient_cases()) {
      for (int t = 0; t < 3; ++t) {
        const GradCheckReport r = c.run(rng);
        INFO(c.name, " trial ", t, " max rel error ", r.max_rel_error);
        CHECK(r.passed);
      }
    }
  }

  TEST_CASE("tiny end-to-end model") {
    std::mt19937_64 rng(23);
    const ModelGradReport r = tiny_model_trial(rng, 6);
    INFO("max rel error ", r.max_rel_error, " over ", r.probes, " probes, ", r.skipped_kinks, " at kinks");
    CHECK(r.probes > 100);
    CHECK(r.passed);
  }
}
