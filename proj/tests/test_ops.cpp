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

#include <cmath>
#include <random>

#include "irsn/ops.hpp"
#include "test_util.hpp"

using namespace irsn;
using irsn::testing::max_abs_diff;
using irsn::testing::randn;
using irsn::testing::to_vec;

namespace {

// Direct nested-loop cross-correlation, one sample.
std::vector<float> conv_oracle(const Tensor& x, const Tensor& k, const std::vector<float>& bias, int stride, int pad) {
  const int64_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  const int64_t o = k.shape()[0], kh = k.shape()[2], kw = k.shape()[3];
  const int64_t oh = (h + 2 * pad - kh) / stride + 1, ow = (w + 2 * pad - kw) / stride + 1;
  std::vector<float> out(static_cast<size_t>(o * oh * ow), 0.0f);
  for (int64_t oc = 0; oc < o; ++oc)
    for (int64_t y = 0; y < oh; ++y)
      for (int64_t xx = 0; xx < ow; ++xx) {
        double s = bias.empty() ? 0.0 : bias[static_cast<size_t>(oc)];
        for (int64_t ic = 0; ic < c; ++ic)
          for (int64_t dy = 0; dy < kh; ++dy)
            for (int64_t dx = 0; dx < kw; ++dx) {
              const int64_t iy = y * stride + dy - pad, ix = xx * stride + dx - pad;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              s += static_cast<double>(x.at({ic, iy, ix})) * k.at({oc, ic, dy, dx});
            }
        out[static_cast<size_t>((oc * oh + y) * ow + xx)] = static_cast<float>(s);
      }
  return out;
}

}  // namespace

TEST_SUITE("ops.elementwise") {
  TEST_CASE("multiplicative identity and annihilator") {
    Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    CHECK(to_vec(mul(a, Tensor::ones({2, 2}))) == std::vector<float>{1, 2, 3, 4});
    CHECK(to_vec(mul(a, Tensor::zeros({2, 2}))) == std::vector<float>{0, 0, 0, 0});
  }

  TEST_CASE("1x2x2 map broadcasts over 3 channels") {
    Tensor x = Tensor::full({3, 2, 2}, 2.0f);
    Tensor m = Tensor::from_data({1, 2, 2}, {1, 0, 0, 1});
    Tensor y = mul(x, m);
    for (int64_t c = 0; c < 3; ++c)
      for (int64_t i = 0; i < 2; ++i)
        for (int64_t j = 0; j < 2; ++j) CHECK(y.at({c, i, j}) == 2.0f * m.at({0, i, j}));
  }

  TEST_CASE("broadcast over batch and channels with add/sub") {
    std::mt19937_64 rng(1);
    Tensor a = randn({2, 3, 2, 2}, rng);
    Tensor b = randn({2, 1, 1, 1}, rng);
    Tensor s = add(a, b), d = sub(a, b);
    for (int64_t n = 0; n < 2; ++n)
      for (int64_t c = 0; c < 3; ++c) {
        CHECK(s.at({n, c, 1, 0}) == a.at({n, c, 1, 0}) + b.at({n, 0, 0, 0}));
        CHECK(d.at({n, c, 0, 1}) == a.at({n, c, 0, 1}) - b.at({n, 0, 0, 0}));
      }
  }

  TEST_CASE("incompatible shapes name both shapes") {
    Tensor a = Tensor::zeros({3, 2});
    Tensor b = Tensor::zeros({3, 3});
    try {
      (void)mul(a, b);
      FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[3x2]") != std::string::npos);
      CHECK(msg.find("[3x3]") != std::string::npos);
    }
  }

  TEST_CASE("broadcast gradient sums over repeated axes") {
    Tensor a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6}, true);
    Tensor b = Tensor::from_data({1, 3}, {1, 1, 1}, true);
    sum(mul(a, b)).backward();
    CHECK(b.grad()[0] == 5.0f);
    CHECK(b.grad()[1] == 7.0f);
    CHECK(b.grad()[2] == 9.0f);
  }
}

TEST_SUITE("ops.matmul") {
  TEST_CASE("identity and hand values") {
    Tensor i2 = Tensor::from_data({2, 2}, {1, 0, 0, 1});
    Tensor b = Tensor::from_data({2, 2}, {5, 6, 7, 8});
    CHECK(to_vec(matmul(i2, b)) == std::vector<float>{5, 6, 7, 8});
    Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    CHECK(to_vec(matmul(a, b)) == std::vector<float>{19, 22, 43, 50});
    CHECK(to_vec(matmul(a, Tensor::zeros({2, 2}))) == std::vector<float>{0, 0, 0, 0});
  }

  TEST_CASE("matches a triple loop on random shapes") {
    std::mt19937_64 rng(2);
    for (auto [m, k, n] : {std::tuple{3, 5, 4}, std::tuple{1, 7, 2}, std::tuple{6, 1, 3}}) {
      Tensor a = randn({m, k}, rng), b = randn({k, n}, rng);
      Tensor c = matmul(a, b);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          double s = 0;
          for (int t = 0; t < k; ++t) s += static_cast<double>(a.at({i, t})) * b.at({t, j});
          CHECK(c.at({i, j}) == doctest::Approx(s).epsilon(1e-5));
        }
    }
  }

  TEST_CASE("batched forms agree with per-slice products") {
    std::mt19937_64 rng(3);
    Tensor a = randn({2, 3, 4}, rng), w = randn({4, 5}, rng), b = randn({2, 4, 5}, rng);
    Tensor c1 = matmul(a, w), c2 = matmul(a, b);
    CHECK(c1.shape() == Shape{2, 3, 5});
    for (int64_t n = 0; n < 2; ++n) {
      Tensor an = Tensor::from_data({3, 4}, std::vector<float>(a.data().begin() + n * 12, a.data().begin() + (n + 1) * 12));
      Tensor bn = Tensor::from_data({4, 5}, std::vector<float>(b.data().begin() + n * 20, b.data().begin() + (n + 1) * 20));
      Tensor r1 = matmul(an, w), r2 = matmul(an, bn);
      for (int64_t i = 0; i < 15; ++i) {
        CHECK(c1.data()[static_cast<size_t>(n * 15 + i)] == doctest::Approx(r1.data()[static_cast<size_t>(i)]));
        CHECK(c2.data()[static_cast<size_t>(n * 15 + i)] == doctest::Approx(r2.data()[static_cast<size_t>(i)]));
      }
    }
  }

  TEST_CASE("inner-dimension mismatch throws") {
    CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
  }
}

TEST_SUITE("ops.conv2d") {
  TEST_CASE("identity 1x1 kernel") {
    std::mt19937_64 rng(4);
    Tensor x = randn({1, 5, 5}, rng);
    Tensor y = conv2d(x, Tensor::ones({1, 1, 1, 1}), Tensor(), 1, 0);
    CHECK(to_vec(y) == to_vec(x));
  }

  TEST_CASE("2x2 ones on 2x2 ones gives 4") {
    Tensor y = conv2d(Tensor::ones({1, 2, 2}), Tensor::ones({1, 1, 2, 2}), Tensor(), 1, 0);
    CHECK(y.shape() == Shape{1, 1, 1});
    CHECK(y.item() == 4.0f);
  }

  TEST_CASE("zero kernel gives zero output") {
    std::mt19937_64 rng(5);
    Tensor y = conv2d(randn({2, 4, 4}, rng), Tensor::zeros({3, 2, 3, 3}), Tensor(), 1, 1);
    for (float v : y.data()) CHECK(v == 0.0f);
  }

  TEST_CASE("matches direct convolution for strides and padding") {
    std::mt19937_64 rng(6);
    for (auto [stride, pad, k] : {std::tuple{1, 0, 3}, std::tuple{2, 1, 3}, std::tuple{2, 0, 2}, std::tuple{3, 2, 3}}) {
      Tensor x = randn({3, 7, 6}, rng), kern = randn({4, 3, k, k}, rng);
      std::vector<float> bias{0.1f, -0.2f, 0.3f, 0.0f};
      Tensor y = conv2d(x, kern, Tensor::from_data({4}, bias), stride, pad);
      const int64_t oh = (7 + 2 * pad - k) / stride + 1, ow = (6 + 2 * pad - k) / stride + 1;
      CHECK(y.shape() == Shape{4, oh, ow});
      CHECK(max_abs_diff(y.data(), conv_oracle(x, kern, bias, stride, pad)) < 1e-4f);
    }
  }

  TEST_CASE("batched input equals per-sample convolution") {
    std::mt19937_64 rng(7);
    Tensor x = randn({2, 2, 5, 5}, rng), kern = randn({3, 2, 3, 3}, rng);
    Tensor y = conv2d(x, kern, Tensor(), 2, 1);
    for (int64_t n = 0; n < 2; ++n) {
      Tensor xn = Tensor::from_data({2, 5, 5}, std::vector<float>(x.data().begin() + n * 50, x.data().begin() + (n + 1) * 50));
      auto ref = conv_oracle(xn, kern, {}, 2, 1);
      CHECK(max_abs_diff(std::span<const float>(y.data().data() + n * 27, 27), ref) < 1e-4f);
    }
  }

  TEST_CASE("kernel larger than padded input throws") {
    CHECK_THROWS_AS(conv2d(Tensor::zeros({1, 2, 2}), Tensor::zeros({1, 1, 5, 5}), Tensor(), 1, 1), ShapeError);
  }
}

TEST_SUITE("ops.activations") {
  TEST_CASE("sigmoid values") {
    CHECK(sigmoid(Tensor::scalar(0.0f)).item() == 0.5f);
    CHECK(sigmoid(Tensor::scalar(2.0f)).item() == doctest::Approx(0.880797).epsilon(1e-6));
  }

  TEST_CASE("softmax of a uniform vector") {
    Tensor s = softmax(Tensor::full({4}, 3.0f));
    for (float v : s.data()) CHECK(v == doctest::Approx(0.25f));
  }

  TEST_CASE("softmax rows sum to one and are shift invariant") {
    std::mt19937_64 rng(8);
    Tensor x = randn({3, 5}, rng);
    Tensor s = softmax(x), t = softmax(add(x, Tensor::full({1, 1}, 100.0f)));
    for (int64_t r = 0; r < 3; ++r) {
      double total = 0;
      for (int64_t c = 0; c < 5; ++c) {
        total += s.at({r, c});
        CHECK(s.at({r, c}) == doctest::Approx(t.at({r, c})).epsilon(1e-5));
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }
  }

  TEST_CASE("exact GELU and ReLU") {
    Tensor x = Tensor::from_data({3}, {-1.0f, 0.0f, 1.5f});
    Tensor g = gelu(x), r = relu(x);
    for (int i = 0; i < 3; ++i) {
      const double v = x.data()[static_cast<size_t>(i)];
      CHECK(g.data()[static_cast<size_t>(i)] == doctest::Approx(0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)))).epsilon(1e-6));
      CHECK(r.data()[static_cast<size_t>(i)] == static_cast<float>(std::max(0.0, v)));
    }
  }
}

TEST_SUITE("ops.layer_norm") {
  TEST_CASE("constant row normalizes to zero") {
    Tensor y = layer_norm(Tensor::full({1, 4}, 3.0f), Tensor::ones({4}), Tensor::zeros({4}));
    for (float v : y.data()) CHECK(v == doctest::Approx(0.0f));
  }

  TEST_CASE("row [1,-1] maps to itself as eps goes to zero") {
    Tensor y = layer_norm(Tensor::from_data({1, 2}, {1, -1}), Tensor::ones({2}), Tensor::zeros({2}), 1e-12f);
    CHECK(y.data()[0] == doctest::Approx(1.0f).epsilon(1e-6));
    CHECK(y.data()[1] == doctest::Approx(-1.0f).epsilon(1e-6));
  }

  TEST_CASE("gamma zero yields beta") {
    std::mt19937_64 rng(9);
    Tensor beta = Tensor::from_data({3}, {0.5f, -1.0f, 2.0f});
    Tensor y = layer_norm(randn({2, 3}, rng), Tensor::zeros({3}), beta);
    for (int64_t r = 0; r < 2; ++r)
      for (int64_t c = 0; c < 3; ++c) CHECK(y.at({r, c}) == beta.at({c}));
  }

  TEST_CASE("rows have zero mean and unit variance before the affine") {
    std::mt19937_64 rng(10);
    Tensor y = layer_norm(randn({4, 16}, rng, false, 3.0f), Tensor::ones({16}), Tensor::zeros({16}));
    for (int64_t r = 0; r < 4; ++r) {
      double m = 0, v = 0;
      for (int64_t c = 0; c < 16; ++c) m += y.at({r, c});
      m /= 16;
      for (int64_t c = 0; c < 16; ++c) v += (y.at({r, c}) - m) * (y.at({r, c}) - m);
      CHECK(m == doctest::Approx(0.0).epsilon(1e-5).scale(1.0));
      CHECK(v / 16 == doctest::Approx(1.0).epsilon(1e-3));
    }
  }
}

TEST_SUITE("ops.pooling") {
  TEST_CASE("3x3 to 3x1 window means") {
    Tensor x = Tensor::from_data({1, 3, 3}, {1, 2, 3, 3, 4, 5, 5, 6, 7});
    CHECK(to_vec(adaptive_avg_pool2d(x, 3, 1)) == std::vector<float>{2, 4, 6});
  }

  TEST_CASE("identity and constant input") {
    std::mt19937_64 rng(11);
    Tensor x = randn({2, 4, 3}, rng);
    CHECK(to_vec(adaptive_avg_pool2d(x, 4, 3)) == to_vec(x));
    const Tensor pooled = adaptive_avg_pool2d(Tensor::full({2, 5, 4}, 1.5f), 3, 2);
    for (float v : pooled.data()) CHECK(v == 1.5f);
  }

  TEST_CASE("1x1 output is the exact arithmetic mean") {
    std::mt19937_64 rng(12);
    Tensor x = randn({1, 5, 4}, rng);
    double s = 0;
    for (float v : x.data()) s += v;
    CHECK(adaptive_avg_pool2d(x, 1, 1).item() == static_cast<float>(s / 20.0));
  }

  TEST_CASE("uneven windows follow floor/ceil bounds") {
    std::mt19937_64 rng(13);
    Tensor x = randn({1, 5, 4}, rng);
    Tensor y = adaptive_avg_pool2d(x, 3, 3);
    for (int64_t i = 0; i < 3; ++i)
      for (int64_t j = 0; j < 3; ++j) {
        const int64_t y0 = (i * 5) / 3, y1 = ((i + 1) * 5 + 2) / 3, x0 = (j * 4) / 3, x1 = ((j + 1) * 4 + 2) / 3;
        double s = 0;
        for (int64_t a = y0; a < y1; ++a)
          for (int64_t b = x0; b < x1; ++b) s += x.at({0, a, b});
        CHECK(y.at({0, i, j}) == doctest::Approx(s / static_cast<double>((y1 - y0) * (x1 - x0))).epsilon(1e-6));
      }
  }

  TEST_CASE("output larger than input throws") {
    CHECK_THROWS_AS(adaptive_avg_pool2d(Tensor::zeros({1, 4, 4}), 5, 3), ShapeError);
  }

  TEST_CASE("pad2d places the input and zero-fills") {
    Tensor x = Tensor::from_data({1, 2, 2}, {1, 2, 3, 4});
    Tensor y = pad2d(x, 1, 0, 0, 1);
    CHECK(y.shape() == Shape{1, 3, 3});
    CHECK(to_vec(y) == std::vector<float>{0, 0, 0, 1, 2, 0, 3, 4, 0});
  }
}

TEST_SUITE("ops.shape") {
  TEST_CASE("permute, transpose, concat and slice") {
    Tensor x = Tensor::from_data({2, 3}, {0, 1, 2, 3, 4, 5});
    CHECK(to_vec(transpose_last2(x)) == std::vector<float>{0, 3, 1, 4, 2, 5});
    CHECK(to_vec(permute(x, {1, 0})) == std::vector<float>{0, 3, 1, 4, 2, 5});
    Tensor c = concat({x, Tensor::from_data({2, 1}, {9, 8})}, 1);
    CHECK(c.shape() == Shape{2, 4});
    CHECK(to_vec(c) == std::vector<float>{0, 1, 2, 9, 3, 4, 5, 8});
    CHECK(to_vec(slice(c, 1, 1, 2)) == std::vector<float>{1, 2, 4, 5});
    CHECK(reshape(x, {3, 2}).shape() == Shape{3, 2});
    CHECK_THROWS_AS(reshape(x, {4, 2}), ShapeError);
    CHECK_THROWS_AS(slice(x, 1, 2, 2), ShapeError);
  }
}

TEST_SUITE("ops.loss") {
  TEST_CASE("uniform logits give log K") {
    for (int k : {2, 3, 10}) {
      for (float eps : {0.0f, 0.1f, 0.5f}) {
        const int label[] = {0};
        CHECK(cross_entropy_label_smooth(Tensor::zeros({1, k}), label, eps).item() ==
              doctest::Approx(std::log(static_cast<double>(k))).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("K=2 zero logits with eps 0.1") {
    const int label[] = {0};
    CHECK(std::abs(cross_entropy_label_smooth(Tensor::zeros({2}), label, 0.1f).item() - 0.693147) < 1e-6);
  }

  TEST_CASE("confident correct logits drive the loss to zero at eps 0") {
    const int label[] = {1};
    CHECK(cross_entropy_label_smooth(Tensor::from_data({1, 3}, {-30, 30, -30}), label, 0.0f).item() < 1e-6f);
  }

  TEST_CASE("hand-computed value on a small batch") {
    Tensor logits = Tensor::from_data({2, 3}, {1, 2, 3, 0, 0.5f, -1});
    const int labels[] = {2, 0};
    const double eps = 0.2;
    double total = 0;
    for (int b = 0; b < 2; ++b) {
      double z = 0;
      for (int k = 0; k < 3; ++k) z += std::exp(static_cast<double>(logits.at({b, k})));
      for (int k = 0; k < 3; ++k) {
        const double q = (k == labels[b] ? 1 - eps : 0) + eps / 3;
        total -= q * (logits.at({b, k}) - std::log(z));
      }
    }
    CHECK(cross_entropy_label_smooth(logits, labels, 0.2f).item() == doctest::Approx(total / 2).epsilon(1e-6));
  }

  TEST_CASE("loss never drops below the smoothed-target entropy") {
    std::mt19937_64 rng(14);
    std::uniform_int_distribution<int> lab(0, 4);
    for (int trial = 0; trial < 50; ++trial) {
      Tensor logits = randn({8, 5}, rng, false, 5.0f);
      std::vector<int> labels(8);
      for (int& y : labels) y = lab(rng);
      const float eps = 0.1f;
      CHECK(cross_entropy_label_smooth(logits, labels, eps).item() >= smoothed_target_entropy(5, eps) - 1e-6);
    }
  }

  TEST_CASE("bad labels and eps are rejected") {
    const int bad[] = {3};
    CHECK_THROWS_AS(cross_entropy_label_smooth(Tensor::zeros({1, 3}), bad, 0.1f), std::out_of_range);
    const int ok[] = {0};
    CHECK_THROWS_AS(cross_entropy_label_smooth(Tensor::zeros({1, 3}), ok, 1.0f), std::invalid_argument);
  }
}
