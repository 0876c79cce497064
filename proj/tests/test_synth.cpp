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

#include <filesystem>
#include <map>

#include "irsn/config.hpp"
#include "irsn/image_io.hpp"
#include "irsn/synth.hpp"

using namespace irsn;
namespace fs = std::filesystem;

namespace {

std::vector<uint8_t> silhouette(const SyntheticSample& s) {
  std::vector<uint8_t> u(s.masks[0].full.size(), 0);
  for (const ItemMask& m : s.masks)
    for (size_t k = 0; k < u.size(); ++k) u[k] |= m.full[k];
  return u;
}

Rgb pixel(const Image& img, int64_t y, int64_t x) { return {img.at(0, y, x), img.at(1, y, x), img.at(2, y, x)}; }

float dist(const Rgb& a, const Rgb& b) { return std::abs(a.r - b.r) + std::abs(a.g - b.g) + std::abs(a.b - b.b); }

// Number of colour runs down the middle column of the top mask.
int band_count(const SyntheticSample& s) {
  const ItemMask& top = s.masks[static_cast<size_t>(Item::kTop)];
  int64_t x0 = top.width, x1 = -1;
  for (int64_t y = 0; y < top.height; ++y)
    for (int64_t x = 0; x < top.width; ++x)
      if (top.full[static_cast<size_t>(y * top.width + x)]) x0 = std::min(x0, x), x1 = std::max(x1, x);
  const int64_t cx = (x0 + x1) / 2;
  int runs = 0;
  Rgb prev{-1, -1, -1};
  for (int64_t y = 0; y < top.height; ++y) {
    if (!top.full[static_cast<size_t>(y * top.width + cx)]) continue;
    const Rgb c = pixel(s.image, y, cx);
    if (runs == 0 || dist(c, prev) > 0.3f) ++runs;
    prev = c;
  }
  return runs;
}

std::string slurp_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  std::string all;
  for (const auto& [k, v] : files) all += k + '\n' + v;
  return all;
}

}  // namespace

TEST_CASE("same rule and seed give bit-identical samples") {
  for (const StyleRule& r : confusable_rules()) {
    const SyntheticSample a = generate_sample(r, 99, {}, "a"), b = generate_sample(r, 99, {}, "a");
    CHECK(a.image.pixels == b.image.pixels);
    CHECK(a.masks == b.masks);
    CHECK(a.label == r.index);
    CHECK(a.style_name == r.name);
  }
  const StyleRule r = confusable_rules()[0];
  CHECK(generate_sample(r, 1).image.pixels != generate_sample(r, 2).image.pixels);
}

TEST_CASE("image values are byte-quantized and masks are binary rectangles inside the frame") {
  for (const StyleRule& r : confusable_rules()) {
    const SyntheticSample s = generate_sample(r, 5);
    CHECK(s.image.height == 64);
    for (float v : s.image.pixels) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
      CHECK(static_cast<float>(to_byte(v)) / 255.0f == v);
    }
    for (const ItemMask& m : s.masks)
      for (uint8_t v : m.full) CHECK(v <= 1);
    CHECK(s.masks[static_cast<size_t>(Item::kTop)].coverage() > 0.0);
    CHECK(s.masks[static_cast<size_t>(Item::kBottom)].coverage() > 0.0);
    CHECK(s.masks[static_cast<size_t>(Item::kShoes)].coverage() > 0.0);
  }
}

TEST_CASE("hat presence follows the rule") {
  for (const StyleRule& r : confusable_rules()) {
    for (uint64_t seed : {1u, 2u, 3u}) {
      const double cov = generate_sample(r, seed).masks[0].coverage();
      if (r.hat) {
        CHECK(cov > 0.0);
      } else {
        CHECK(cov == 0.0);
      }
    }
  }
}

TEST_CASE("striped tops show at least two bands under the top mask") {
  for (const StyleRule& r : confusable_rules()) {
    if (r.top_pattern != TopPattern::kStripes) continue;
    for (uint64_t seed = 0; seed < 20; ++seed) CHECK(band_count(generate_sample(r, seed)) >= 2);
  }
  CHECK(band_count(generate_sample(confusable_rules()[0], 3)) == 1);  // solid navy
}

TEST_CASE("three confusable pairs share silhouettes exactly") {
  const auto rules = confusable_rules();
  const auto pairs = confusable_pairs(rules);
  CHECK(pairs == std::vector<std::pair<int, int>>{{2, 9}, {4, 5}, {7, 8}});
  for (auto [a, b] : pairs) {
    CHECK_FALSE(discriminative_items(rules[a], rules[b]).empty());
    for (uint64_t seed = 0; seed < 25; ++seed) {
      const SyntheticSample sa = generate_sample(rules[a], seed), sb = generate_sample(rules[b], seed);
      CHECK(silhouette(sa) == silhouette(sb));
      for (int i = 0; i < kNumItems; ++i) CHECK(sa.masks[i] == sb.masks[i]);
    }
  }
  CHECK(discriminative_items(rules[4], rules[5]) == std::vector<Item>{Item::kShoes});
  CHECK(discriminative_items(rules[7], rules[8]) == std::vector<Item>{Item::kTop});
}

TEST_CASE("rule matching on ground-truth attributes separates every class") {
  DatasetSpec spec;
  spec.test_per_class = 30;
  for (const std::string variant : {"confusable", "spatial"}) {
    spec.variant = variant;
    const auto rules = rules_by_name(variant);
    for (const SyntheticSample& s : generate_split(spec, Split::kTest)) CHECK(match_rule(rules, s.attributes) == s.label);
  }
}

TEST_CASE("spatial variant pairs differ only by accessory position") {
  const auto rules = spatial_rules();
  for (auto [a, b] : std::vector<std::pair<int, int>>{{2, 9}, {4, 5}, {7, 8}}) {
    CHECK(discriminative_items(rules[a], rules[b]).empty());
    CHECK(rules[a].accessory != rules[b].accessory);
  }
  CHECK_THROWS_AS(rules_by_name("nope"), ConfigError);
}

TEST_CASE("split seeds are disjoint") {
  CHECK(sample_seed(7, Split::kTrain, 0, 0) != sample_seed(7, Split::kVal, 0, 0));
  CHECK(sample_seed(7, Split::kTrain, 0, 0) != sample_seed(7, Split::kTest, 0, 0));
  CHECK(sample_seed(7, Split::kTest, 1, 0) != sample_seed(7, Split::kTest, 0, 1));
  CHECK(sample_id(Split::kVal, 3, 12) == "val_03_00012");
  CHECK(parse_split("test") == Split::kTest);
  CHECK_THROWS_AS(parse_split("dev"), ConfigError);
}

TEST_CASE("class weights scale counts") {
  DatasetSpec spec;
  spec.class_weights.assign(10, 1.0);
  spec.class_weights[7] = 5.0;  // street
  CHECK(spec.count(Split::kTest, 8) == 100);
  CHECK(spec.count(Split::kTest, 7) == 500);
  std::map<int, int> counts;
  for (const SyntheticSample& s : generate_split(spec, Split::kTest)) ++counts[s.label];
  CHECK(counts[8] == 100);
  CHECK(counts[7] == 500);

  spec.class_weights.pop_back();
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  DatasetSpec zero;
  zero.test_per_class = 0;
  CHECK_THROWS_AS(zero.validate(), ConfigError);
}

TEST_CASE("dataset on disk: manifest counts, byte-identical regeneration, load round trip") {
  DatasetSpec spec;
  spec.train_per_class = 60;
  spec.val_per_class = 15;
  spec.test_per_class = 25;
  const fs::path a = fs::temp_directory_path() / "irsn_test_synth_a", b = fs::temp_directory_path() / "irsn_test_synth_b";
  fs::remove_all(a);
  fs::remove_all(b);
  CHECK(generate_dataset(spec, a) == 1000);
  generate_dataset(spec, b);
  CHECK(read_manifest(a).size() == 1000);
  CHECK(read_file(a / "manifest.csv").rfind("id,split,label,style_name\n", 0) == 0);
  CHECK(slurp_tree(a) == slurp_tree(b));

  const DatasetSpec back = read_dataset_spec(a);
  CHECK(back.train_per_class == 60);
  CHECK(back.seed == spec.seed);
  const auto test = load_split(a, Split::kTest);
  const auto fresh = generate_split(spec, Split::kTest);
  REQUIRE(test.size() == fresh.size());
  for (size_t i = 0; i < test.size(); i += 37) {
    CHECK(test[i].image.pixels == fresh[i].image.pixels);
    CHECK(test[i].masks == fresh[i].masks);
    CHECK(test[i].label == fresh[i].label);
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("missing or unwritable dataset paths raise IoError") {
  CHECK_THROWS_AS(read_manifest("/nonexistent/irsn"), IoError);
  CHECK_THROWS_AS(generate_dataset(DatasetSpec{}, "/proc/irsn_cannot_write"), IoError);
}
