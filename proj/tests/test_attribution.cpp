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

#include "irsn/attribution.hpp"
#include "irsn/synth.hpp"
#include "irsn/train.hpp"
#include "test_util.hpp"

using namespace irsn;
using irsn::testing::randn;

namespace {

IrsnConfig cam_config(uint64_t seed) {
  IrsnConfig c;
  c.dfe.stages = {{8, 2}, {8, 2}, {8, 2}};
  c.dfe.input_h = c.dfe.input_w = 32;
  c.gfe.dim = 16;
  c.head_hidden = 16;
  c.num_classes = 10;
  c.seed = seed;
  return c;
}

ModelInput sample_input(const IrsnModel& m, int n) {
  GeneratorOptions g;
  g.height = g.width = 32;
  std::vector<float> pixels;
  std::vector<ItemMasks> masks;
  for (int i = 0; i < n; ++i) {
    const SyntheticSample s = generate_sample(confusable_rules()[static_cast<size_t>(i % 10)], 100 + i, g);
    pixels.insert(pixels.end(), s.image.pixels.begin(), s.image.pixels.end());
    masks.push_back(s.masks);
  }
  return m.make_input(Tensor::from_data({n, 3, 32, 32}, std::move(pixels)), masks);
}

}  // namespace

TEST_CASE("cam of a summed single channel is the rectified activation") {
  const Tensor a = Tensor::from_data({1, 2, 3}, {1.0f, -2.0f, 0.5f, -0.1f, 3.0f, 0.0f});
  const std::vector<float> ones(6, 1.0f);  // d sum(A) / dA
  CHECK(cam_from_gradients(a, ones) == std::vector<float>{1.0f, 0.0f, 0.5f, 0.0f, 3.0f, 0.0f});
  // two channels, hand-computed weights 0.5 and -1
  const Tensor b = Tensor::from_data({2, 1, 2}, {2.0f, 4.0f, 1.0f, 5.0f});
  const std::vector<float> g{0.0f, 1.0f, -1.0f, -1.0f};
  CHECK(cam_from_gradients(b, g) == std::vector<float>{0.0f, 0.0f});
  const std::vector<float> g2{1.0f, 0.0f, -0.25f, -0.25f};
  CHECK(cam_from_gradients(b, g2) == std::vector<float>{0.75f, 0.75f});
}

TEST_CASE("normalisation helpers") {
  std::vector<float> v{0.0f, 2.0f, 0.5f};
  normalize_max(v);
  CHECK(v == std::vector<float>{0.0f, 1.0f, 0.25f});
  std::vector<float> z(4, 0.0f);
  normalize_max(z);
  CHECK(z == std::vector<float>(4, 0.0f));
  std::vector<float> s{-4.0f, 1.0f, 2.0f};
  normalize_symmetric(s);
  CHECK(s == std::vector<float>{-1.0f, 0.25f, 0.5f});
}

TEST_CASE("bilinear resize with half-pixel centres") {
  const std::vector<float> v{0, 1, 2, 3};
  CHECK(bilinear_resize(v, 2, 2, 2, 2) == v);
  const auto up = bilinear_resize(v, 2, 2, 4, 4);
  CHECK(std::vector<float>(up.begin(), up.begin() + 4) == std::vector<float>{0.0f, 0.25f, 0.75f, 1.0f});
  CHECK(std::vector<float>(up.begin() + 4, up.begin() + 8) == std::vector<float>{0.5f, 0.75f, 1.25f, 1.5f});
  CHECK(up[15] == 3.0f);
  for (float x : bilinear_resize(std::vector<float>(6, 0.7f), 2, 3, 9, 5)) CHECK(x == doctest::Approx(0.7f));
}

TEST_CASE("maps are non-negative, bounded, and sized per options") {
  const IrsnModel m(cam_config(3));
  const ModelInput in = sample_input(m, 4);
  const std::vector<int> targets{0, 1, 2, 3};
  for (const SaliencyMap& s : grad_cam(m, in, targets)) {
    CHECK(s.height == 32);
    CHECK(s.width == 32);
    CHECK(s.tap == "dfe");
    float mx = 0.0f;
    for (float v : s.values) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
      mx = std::max(mx, v);
    }
    CHECK((mx == 1.0f || mx == 0.0f));
  }
  CamOptions raw;
  raw.upsample = false;
  raw.tap = "dfe.stage1";
  const SaliencyMap s = grad_cam(m, sample_input(m, 1), 4, raw);
  CHECK(s.height == 8);
  CHECK(s.target == 4);
  CHECK_THROWS_AS(grad_cam(m, in, targets, CamOptions{"gff", true, true}), std::invalid_argument);
  CHECK_THROWS_AS(grad_cam(m, in, targets, CamOptions{"dfe.stage9", true, true}), std::invalid_argument);
  const std::vector<int> bad{0, 1, 2, 10};
  CHECK_THROWS_AS(grad_cam(m, in, bad), std::out_of_range);
}

TEST_CASE("a score that ignores the tap gives an all-zero map") {
  IrsnModel m(cam_config(4));
  Tensor w = m.head_out().weight;
  std::fill(w.data().begin(), w.data().end(), 0.0f);
  for (float v : grad_cam(m, sample_input(m, 1), 2).values) CHECK(v == 0.0f);
}

TEST_CASE("grad-cam leaves no parameter gradients behind") {
  const IrsnModel m(cam_config(5));
  grad_cam(m, sample_input(m, 2), std::vector<int>{1, 1});
  for (const NamedTensor& p : m.named_parameters()) {
    if (!p.tensor.has_grad()) continue;
    for (float g : p.tensor.grad()) CHECK(g == 0.0f);
  }
}

TEST_CASE("difference maps: zero for identical models, antisymmetric otherwise") {
  const IrsnModel a(cam_config(6)), b(cam_config(7));
  const ModelInput in = sample_input(a, 3);
  const std::vector<int> t{0, 5, 9};
  for (const DiffMap& d : grad_cam_diff(a, a, in, t))
    for (float v : d.values) CHECK(v == 0.0f);
  const auto ab = grad_cam_diff(a, b, in, t), ba = grad_cam_diff(b, a, in, t);
  for (size_t i = 0; i < ab.size(); ++i) {
    float mx = 0.0f;
    for (size_t k = 0; k < ab[i].values.size(); ++k) {
      CHECK(ab[i].values[k] == -ba[i].values[k]);
      mx = std::max(mx, std::abs(ab[i].values[k]));
    }
    CHECK(mx <= 1.0f);
  }
  DiffOptions before;
  before.normalize_before_subtract = true;
  for (const DiffMap& d : grad_cam_diff(a, b, in, t, before))
    for (float v : d.values) CHECK(std::abs(v) <= 1.0f);
}

TEST_CASE("difference maps of differently sized taps are rejected") {
  IrsnConfig other = cam_config(8);
  other.dfe.stages = {{8, 2}, {8, 2}};
  const IrsnModel a(cam_config(6)), b(other);
  const ModelInput in = sample_input(a, 1);
  DiffOptions raw;
  raw.upsample = false;
  CHECK_THROWS_AS(grad_cam_diff(a, b, in, std::vector<int>{0}, raw), ShapeError);
}

TEST_CASE("overlay, csv, and mask mass") {
  Image img{1, 2, {0.5f, 1.0f, 0.2f, 0.4f, 1.0f, 1.0f}};
  DiffMap d{1, 2, {-0.5f, 1.0f}, 0};
  const Image o = diff_overlay(img, d);
  CHECK(o.pixels == std::vector<float>{0.25f, 1.0f, 0.1f, 0.4f, 0.5f, 1.0f});
  CHECK(map_csv(d.values, 1, 2) == "-0.5,1\n");

  ItemMask m = ItemMask::empty(Item::kShoes, 2, 2);
  m.full = {1, 0, 0, 0};
  ItemMask n = ItemMask::empty(Item::kTop, 2, 2);
  n.full = {0, 1, 0, 0};
  const std::vector<float> v{0.5f, 0.25f, -1.0f, 0.125f};
  const MaskMass one = positive_mass(v, 2, 2, {m});
  CHECK(one.inside == 0.5);
  CHECK(one.outside == 0.375);
  const MaskMass both = positive_mass(v, 2, 2, {m, n});
  CHECK(both.inside == 0.75);
  CHECK(both.outside == 0.125);
}
