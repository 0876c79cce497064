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

#include "irsn/ops.hpp"
#include "irsn/tensor.hpp"
#include "test_util.hpp"

using namespace irsn;
using irsn::testing::to_vec;

TEST_SUITE("tensor") {
  TEST_CASE("construction keeps numel and shape consistent") {
    Tensor t = Tensor::zeros({2, 3, 4});
    CHECK(t.numel() == 24);
    CHECK(t.rank() == 3);
    CHECK(t.dim(-1) == 4);
    CHECK(static_cast<int64_t>(t.data().size()) == shape_numel(t.shape()));
    CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1.0f, 2.0f, 3.0f}), ShapeError);
    CHECK_THROWS_AS(Tensor::zeros({2, 0}), ShapeError);
  }

  TEST_CASE("at indexes row-major") {
    Tensor t = Tensor::from_data({2, 3}, {0, 1, 2, 3, 4, 5});
    CHECK(t.at({1, 2}) == 5.0f);
    CHECK(t.at({0, 1}) == 1.0f);
    CHECK_THROWS(t.at({2, 0}));
  }

  TEST_CASE("clone copies data, detach drops the graph") {
    Tensor a = Tensor::from_data({2}, {1, 2}, true);
    Tensor c = a.clone();
    c.data()[0] = 9.0f;
    CHECK(a.data()[0] == 1.0f);
    Tensor d = scale(a, 2.0f).detach();
    CHECK_FALSE(d.requires_grad());
  }

  TEST_CASE("backward of sum(w) gives ones") {
    Tensor w = Tensor::from_data({3}, {0.5f, -1.0f, 2.0f}, true);
    sum(w).backward();
    CHECK(to_vec(Tensor::from_data({3}, {w.grad()[0], w.grad()[1], w.grad()[2]})) == std::vector<float>{1, 1, 1});
  }

  TEST_CASE("backward of sum(w*w) gives 2w") {
    Tensor w = Tensor::from_data({3}, {0.5f, -1.0f, 2.0f}, true);
    sum(mul(w, w)).backward();
    CHECK(w.grad()[0] == 1.0f);
    CHECK(w.grad()[1] == -2.0f);
    CHECK(w.grad()[2] == 4.0f);
  }

  TEST_CASE("gradients accumulate across uses of a tensor") {
    Tensor w = Tensor::from_data({2}, {1.0f, 2.0f}, true);
    Tensor y = add(w, w);
    sum(mul(y, w)).backward();  // 2 w^2 -> 4w
    CHECK(w.grad()[0] == doctest::Approx(4.0f));
    CHECK(w.grad()[1] == doctest::Approx(8.0f));
  }

  TEST_CASE("non-scalar backward is rejected") {
    Tensor w = Tensor::from_data({2}, {1.0f, 2.0f}, true);
    Tensor y = scale(w, 3.0f);
    CHECK_THROWS_AS(y.backward(), ShapeError);
  }

  TEST_CASE("backward on a constant is rejected") {
    Tensor c = Tensor::scalar(1.0f);
    CHECK_THROWS(c.backward());
  }

  TEST_CASE("graph is released after backward") {
    Tensor w = Tensor::from_data({2}, {1.0f, 2.0f}, true);
    Tensor loss = sum(mul(w, w));
    loss.backward();
    CHECK(loss.impl()->grad_fn == nullptr);
  }

  TEST_CASE("no-grad guard stops recording") {
    Tensor w = Tensor::from_data({2}, {1.0f, 2.0f}, true);
    {
      NoGradGuard guard;
      CHECK_FALSE(grad_enabled());
      Tensor y = mul(w, w);
      CHECK_FALSE(y.requires_grad());
    }
    CHECK(grad_enabled());
    CHECK(mul(w, w).requires_grad());
  }

  TEST_CASE("zero_grad clears the buffer") {
    Tensor w = Tensor::from_data({2}, {1.0f, 2.0f}, true);
    sum(w).backward();
    w.zero_grad();
    CHECK(w.grad()[0] == 0.0f);
    CHECK(w.grad()[1] == 0.0f);
  }
}
