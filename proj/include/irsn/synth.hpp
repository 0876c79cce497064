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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "irsn/image_io.hpp"
#include "irsn/segmentation.hpp"

namespace irsn {

struct Rgb {
  float r = 0.0f, g = 0.0f, b = 0.0f;
  bool operator==(const Rgb&) const = default;
};

enum class TopPattern { kSolid, kStripes, kDots, kChecks };
enum class BottomShape { kWide, kSlim, kSkirt };
enum class Silhouette { kLoose, kFitted };
// Off-body bag used by the spatial benchmark variant.
enum class Accessory { kNone, kLeft, kRight, kHigh, kLow };

struct StyleRule {
  int index = 0;
  std::string name;
  Silhouette silhouette = Silhouette::kFitted;
  bool hat = false;
  Rgb hat_color;
  TopPattern top_pattern = TopPattern::kSolid;
  Rgb top_primary, top_secondary;
  BottomShape bottom_shape = BottomShape::kSlim;
  Rgb bottom_color;
  Rgb shoes_color;
  bool high_shoes = false;
  Accessory accessory = Accessory::kNone;

  // Rules with equal geometry keys render identical silhouettes for a seed.
  bool same_silhouette(const StyleRule& other) const;
};

/// Rule sets. "confusable": ten styles, three pairs sharing a silhouette and
/// differing only in item colors/patterns. "spatial": same styles, but the
/// three pairs differ only in where an off-body bag sits (left/right or
/// high/low), so the cue is positional.
std::vector<StyleRule> confusable_rules();
std::vector<StyleRule> spatial_rules();
std::vector<StyleRule> rules_by_name(const std::string& variant);
/// Index pairs of rules that share a silhouette.
std::vector<std::pair<int, int>> confusable_pairs(const std::vector<StyleRule>& rules);
/// Items whose rule-mandated attributes differ between two rules.
std::vector<Item> discriminative_items(const StyleRule& a, const StyleRule& b);

/// Attributes as rendered (colors after jitter).
struct SampleAttributes {
  Silhouette silhouette = Silhouette::kFitted;
  bool hat = false;
  Rgb hat_color;
  TopPattern top_pattern = TopPattern::kSolid;
  Rgb top_primary, top_secondary;
  BottomShape bottom_shape = BottomShape::kSlim;
  Rgb bottom_color;
  Rgb shoes_color;
  bool high_shoes = false;
  Accessory accessory = Accessory::kNone;
};

struct SyntheticSample {
  std::string id;
  Image image;  // 3 x H x W, quantized to multiples of 1/255
  ItemMasks masks;
  int label = 0;
  std::string style_name;
  SampleAttributes attributes;
};

struct GeneratorOptions {
  int64_t height = 64;
  int64_t width = 64;
  int min_distractors = 1;
  int max_distractors = 2;
  float speckle = 0.06f;
  float hue_jitter = 0.05f;
};

/// Deterministic in (rule, seed). Geometry draws come from a stream that does
/// not depend on rule colors, so rules with the same silhouette produce the
/// same masks for the same seed.
SyntheticSample generate_sample(const StyleRule& rule, uint64_t seed, const GeneratorOptions& options = {},
                                const std::string& id = "");

/// Brute-force rule matcher over rendered attributes: the rule whose discrete
/// attributes agree and whose palette is nearest in color.
int match_rule(const std::vector<StyleRule>& rules, const SampleAttributes& attributes);

enum class Split { kTrain, kVal, kTest };
std::string_view split_name(Split split);
Split parse_split(std::string_view name);

struct DatasetSpec {
  std::string variant = "confusable";
  int num_classes = 10;     // first N rules of the variant
  int train_per_class = 200;
  int val_per_class = 50;
  int test_per_class = 100;
  std::vector<double> class_weights;  // optional; scales every split's per-class count
  uint64_t seed = 7;
  GeneratorOptions generator;

  int count(Split split, int label) const;
  void validate() const;
};

uint64_t sample_seed(uint64_t base, Split split, int label, int index);
std::string sample_id(Split split, int label, int index);

/// In-memory generation of one split in manifest order.
std::vector<SyntheticSample> generate_split(const DatasetSpec& spec, Split split);

/// Writes <root>/manifest.csv, <root>/dataset.cfg, images/<id>.ppm and
/// masks/<id>_<item>.pgm. Returns number of samples written.
int64_t generate_dataset(const DatasetSpec& spec, const std::filesystem::path& root);

struct ManifestRow {
  std::string id;
  Split split;
  int label;
  std::string style_name;
};

std::vector<ManifestRow> read_manifest(const std::filesystem::path& root);
DatasetSpec read_dataset_spec(const std::filesystem::path& root);
std::vector<std::string> class_names(const DatasetSpec& spec);

/// Loads every sample of a split from disk (image + masks via FileSegmenter).
std::vector<SyntheticSample> load_split(const std::filesystem::path& root, Split split);

}  // namespace irsn
