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

#include "irsn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "irsn/config.hpp"

namespace irsn {
namespace {

namespace palette {
constexpr Rgb kNavy{0.10f, 0.13f, 0.40f};
constexpr Rgb kBlack{0.08f, 0.08f, 0.08f};
constexpr Rgb kGray{0.50f, 0.50f, 0.52f};
constexpr Rgb kWhite{0.96f, 0.96f, 0.96f};
constexpr Rgb kRed{0.85f, 0.12f, 0.12f};
constexpr Rgb kBlue{0.15f, 0.35f, 0.85f};
constexpr Rgb kBrown{0.45f, 0.27f, 0.10f};
constexpr Rgb kTan{0.80f, 0.64f, 0.42f};
constexpr Rgb kCream{0.95f, 0.90f, 0.72f};
constexpr Rgb kOrange{0.95f, 0.55f, 0.10f};
constexpr Rgb kYellow{0.95f, 0.85f, 0.15f};
constexpr Rgb kGreen{0.15f, 0.55f, 0.22f};
constexpr Rgb kKhaki{0.62f, 0.58f, 0.36f};
constexpr Rgb kSkin{0.93f, 0.76f, 0.62f};
constexpr Rgb kBackground{0.80f, 0.82f, 0.80f};
}  // namespace palette

// Colors used by the confusable pairs; distractors draw from these.
constexpr Rgb kDistractorColors[] = {palette::kBlack, palette::kWhite, palette::kRed, palette::kGray};

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

struct Rect {
  int64_t y0, y1, x0, x1;  // half-open
};

class Canvas {
 public:
  Canvas(int64_t h, int64_t w)
      : image_{h, w, std::vector<float>(static_cast<size_t>(3 * h * w))}, body_(static_cast<size_t>(h * w), 0) {}

  void put(int64_t y, int64_t x, const Rgb& c) {
    if (y < 0 || y >= image_.height || x < 0 || x >= image_.width) return;
    image_.at(0, y, x) = c.r;
    image_.at(1, y, x) = c.g;
    image_.at(2, y, x) = c.b;
  }

  // behind: paint only where no figure pixel has been drawn yet.
  void fill(const Rect& r, TopPattern pattern, const Rgb& primary, const Rgb& secondary, ItemMask* mask = nullptr,
            bool behind = false) {
    for (int64_t y = r.y0; y < r.y1; ++y) {
      for (int64_t x = r.x0; x < r.x1; ++x) {
        if (y < 0 || y >= image_.height || x < 0 || x >= image_.width) continue;
        uint8_t& covered = body_[static_cast<size_t>(y * image_.width + x)];
        if (behind && covered) continue;
        if (!behind) covered = 1;
        const int64_t dy = y - r.y0, dx = x - r.x0;
        bool alt = false;
        switch (pattern) {
          case TopPattern::kSolid: break;
          case TopPattern::kStripes: alt = (dy / 2) % 2 == 1; break;
          case TopPattern::kDots: alt = dy % 5 >= 1 && dy % 5 <= 2 && dx % 5 >= 1 && dx % 5 <= 2; break;
          case TopPattern::kChecks: alt = ((dy / 3) + (dx / 3)) % 2 == 1; break;
        }
        put(y, x, alt ? secondary : primary);
        if (mask && y >= 0 && y < mask->height && x >= 0 && x < mask->width) mask->full[static_cast<size_t>(y * mask->width + x)] = 1;
      }
    }
  }

  Image& image() { return image_; }

 private:
  Image image_;
  std::vector<uint8_t> body_;
};

Rgb jitter(const Rgb& c, float amount, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> d(-amount, amount);
  auto clamp01 = [](float v) { return std::clamp(v, 0.0f, 1.0f); };
  const float dr = d(rng), dg = d(rng), db = d(rng);
  return {clamp01(c.r + dr), clamp01(c.g + dg), clamp01(c.b + db)};
}

float color_distance(const Rgb& a, const Rgb& b) {
  return std::abs(a.r - b.r) + std::abs(a.g - b.g) + std::abs(a.b - b.b);
}

StyleRule make_rule(int index, const char* name, Silhouette sil, bool hat, Rgb hat_color, TopPattern pattern, Rgb top1,
                    Rgb top2, BottomShape bottom, Rgb bottom_color, Rgb shoes, bool high) {
  StyleRule r;
  r.index = index;
  r.name = name;
  r.silhouette = sil;
  r.hat = hat;
  r.hat_color = hat_color;
  r.top_pattern = pattern;
  r.top_primary = top1;
  r.top_secondary = top2;
  r.bottom_shape = bottom;
  r.bottom_color = bottom_color;
  r.shoes_color = shoes;
  r.high_shoes = high;
  return r;
}

}  // namespace

bool StyleRule::same_silhouette(const StyleRule& other) const {
  return silhouette == other.silhouette && hat == other.hat && bottom_shape == other.bottom_shape &&
         high_shoes == other.high_shoes;
}

std::vector<StyleRule> confusable_rules() {
  using namespace palette;
  using S = Silhouette;
  using P = TopPattern;
  using B = BottomShape;
  return {
      make_rule(0, "gentleman", S::kFitted, true, kBlack, P::kSolid, kNavy, kNavy, B::kSlim, kGray, kBlack, false),
      make_rule(1, "bohemian", S::kLoose, true, kTan, P::kDots, kOrange, kCream, B::kSkirt, kBrown, kBrown, false),
      // minimalist / basic: same items, top and bottom colors swapped
      make_rule(2, "minimalist", S::kFitted, false, kBlack, P::kSolid, kWhite, kWhite, B::kSlim, kBlack, kWhite, false),
      make_rule(3, "vacation", S::kLoose, true, kYellow, P::kStripes, kBlue, kWhite, B::kWide, kKhaki, kTan, false),
      // sporty / techwear: shoe color only
      make_rule(4, "sporty", S::kFitted, false, kBlack, P::kStripes, kGray, kWhite, B::kWide, kBlack, kWhite, true),
      make_rule(5, "techwear", S::kFitted, false, kBlack, P::kStripes, kGray, kWhite, B::kWide, kBlack, kBlack, true),
      make_rule(6, "retro", S::kLoose, true, kBrown, P::kChecks, kRed, kCream, B::kSlim, kGreen, kBrown, false),
      // street / punk: stripes vs checks in the same colors
      make_rule(7, "street", S::kLoose, false, kBlack, P::kStripes, kBlack, kRed, B::kWide, kBlue, kWhite, true),
      make_rule(8, "punk", S::kLoose, false, kBlack, P::kChecks, kBlack, kRed, B::kWide, kBlue, kWhite, true),
      make_rule(9, "basic", S::kFitted, false, kBlack, P::kSolid, kBlack, kBlack, B::kSlim, kWhite, kWhite, false),
  };
}

std::vector<StyleRule> spatial_rules() {
  std::vector<StyleRule> rules = confusable_rules();
  // Pair members become item-identical; only the bag position tells them apart.
  auto copy_items = [&](int from, int to) {
    StyleRule r = rules[static_cast<size_t>(from)];
    r.index = to;
    r.name = rules[static_cast<size_t>(to)].name;
    rules[static_cast<size_t>(to)] = r;
  };
  copy_items(2, 9);
  copy_items(4, 5);
  copy_items(7, 8);
  rules[2].accessory = Accessory::kLeft;
  rules[9].accessory = Accessory::kRight;
  rules[4].accessory = Accessory::kLeft;
  rules[5].accessory = Accessory::kRight;
  rules[7].accessory = Accessory::kHigh;
  rules[8].accessory = Accessory::kLow;
  return rules;
}

std::vector<StyleRule> rules_by_name(const std::string& variant) {
  if (variant == "confusable") return confusable_rules();
  if (variant == "spatial") return spatial_rules();
  throw ConfigError("unknown dataset variant '" + variant + "' (expected confusable or spatial)");
}

std::vector<std::pair<int, int>> confusable_pairs(const std::vector<StyleRule>& rules) {
  std::vector<std::pair<int, int>> pairs;
  for (size_t i = 0; i < rules.size(); ++i) {
    for (size_t j = i + 1; j < rules.size(); ++j) {
      if (rules[i].same_silhouette(rules[j])) pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return pairs;
}

SyntheticSample generate_sample(const StyleRule& rule, uint64_t seed, const GeneratorOptions& options, const std::string& id) {
  const int64_t H = options.height, W = options.width;
  if (H < 32 || W < 32) throw std::invalid_argument("generate_sample: canvas must be at least 32x32");
  // Layout is authored on a 64x64 grid and scaled.
  const double sy = static_cast<double>(H) / 64.0, sx = static_cast<double>(W) / 64.0;
  auto Y = [&](double v) { return static_cast<int64_t>(std::lround(v * sy)); };
  auto X = [&](double v) { return static_cast<int64_t>(std::lround(v * sx)); };
  auto rect = [&](double y0, double y1, double x0, double x1) { return Rect{Y(y0), Y(y1), X(x0), X(x1)}; };

  // Geometry stream: identical draws for every rule.
  std::mt19937_64 geo(splitmix64(seed));
  std::uniform_int_distribution<int> jx_d(-6, 6), jy_d(-3, 3), top_len_d(14, 18), bottom_len_d(17, 20);
  const int jx = jx_d(geo), jy = jy_d(geo);
  const int top_len = top_len_d(geo), bottom_len = bottom_len_d(geo);
  std::uniform_int_distribution<int> count_d(options.min_distractors, std::max(options.min_distractors, options.max_distractors));
  const int n_distractors = count_d(geo);
  struct Blob {
    bool left;
    int band;  // 0 beside the top, 1 beside the bottom, 2 beside the shoes
    int w, h, gap, dy;
  };
  std::vector<Blob> blobs;
  for (int i = 0; i < std::max(options.max_distractors, 0); ++i) {
    std::uniform_int_distribution<int> side(0, 1), band(0, 2), w(6, 12), h(6, 12), gap(0, 1), dy(-2, 2);
    Blob b{side(geo) == 0, band(geo), w(geo), h(geo), gap(geo), dy(geo)};
    blobs.push_back(b);
  }
  std::uniform_int_distribution<int> bag_jitter(-2, 2);
  const int bag_dy = bag_jitter(geo);

  // Appearance stream.
  std::mt19937_64 look(splitmix64(seed ^ 0xA5A5A5A5DEADBEEFull));
  const float hj = options.hue_jitter;

  Canvas canvas(H, W);
  SyntheticSample s;
  s.id = id;
  s.label = rule.index;
  s.style_name = rule.name;
  for (Item item : kItems) s.masks[static_cast<size_t>(item)] = ItemMask::empty(item, H, W);

  std::uniform_real_distribution<float> speckle(-options.speckle, options.speckle);
  const Rgb bg = jitter(palette::kBackground, hj, look);
  for (int64_t y = 0; y < H; ++y) {
    for (int64_t x = 0; x < W; ++x) {
      const float n = speckle(look);
      canvas.put(y, x, {std::clamp(bg.r + n, 0.0f, 1.0f), std::clamp(bg.g + n, 0.0f, 1.0f), std::clamp(bg.b + n, 0.0f, 1.0f)});
    }
  }

  const double cx = 32.0 + jx;
  const double y0 = 3.0 + jy;
  const double body_half = 15.0;

  SampleAttributes attr;
  attr.silhouette = rule.silhouette;
  attr.hat = rule.hat;
  attr.top_pattern = rule.top_pattern;
  attr.bottom_shape = rule.bottom_shape;
  attr.high_shoes = rule.high_shoes;
  attr.accessory = rule.accessory;
  attr.hat_color = jitter(rule.hat_color, hj, look);
  attr.top_primary = jitter(rule.top_primary, hj, look);
  attr.top_secondary = jitter(rule.top_secondary, hj, look);
  attr.bottom_color = jitter(rule.bottom_color, hj, look);
  attr.shoes_color = jitter(rule.shoes_color, hj, look);
  const Rgb skin = jitter(palette::kSkin, hj, look);

  const double top_y = y0 + 13.0;
  const double bottom_y = top_y + top_len;
  const double shoes_y = bottom_y + bottom_len;
  const double shoes_h = rule.high_shoes ? 5.0 : 3.0;

  // Face and neck are skin, not an item.
  canvas.fill(rect(y0 + 4, y0 + 12, cx - 4, cx + 4), TopPattern::kSolid, skin, skin);
  canvas.fill(rect(y0 + 12, top_y, cx - 2, cx + 2), TopPattern::kSolid, skin, skin);

  ItemMask& top_mask = s.masks[static_cast<size_t>(Item::kTop)];
  const double top_half = rule.silhouette == Silhouette::kLoose ? 14.0 : 10.0;
  canvas.fill(rect(top_y, bottom_y, cx - top_half, cx + top_half), rule.top_pattern, attr.top_primary, attr.top_secondary,
              &top_mask);

  ItemMask& bottom_mask = s.masks[static_cast<size_t>(Item::kBottom)];
  switch (rule.bottom_shape) {
    case BottomShape::kWide:
      canvas.fill(rect(bottom_y, shoes_y, cx - 12, cx + 12), TopPattern::kSolid, attr.bottom_color, attr.bottom_color, &bottom_mask);
      break;
    case BottomShape::kSlim:
      canvas.fill(rect(bottom_y, shoes_y, cx - 8, cx - 1), TopPattern::kSolid, attr.bottom_color, attr.bottom_color, &bottom_mask);
      canvas.fill(rect(bottom_y, shoes_y, cx + 1, cx + 8), TopPattern::kSolid, attr.bottom_color, attr.bottom_color, &bottom_mask);
      break;
    case BottomShape::kSkirt: {
      // Four stacked bands widening downward.
      const double step = bottom_len / 4.0;
      for (int k = 0; k < 4; ++k) {
        const double half = 10.0 + 1.5 * k;
        canvas.fill(rect(bottom_y + k * step, bottom_y + (k + 1) * step, cx - half, cx + half), TopPattern::kSolid,
                    attr.bottom_color, attr.bottom_color, &bottom_mask);
      }
      break;
    }
  }

  ItemMask& shoes_mask = s.masks[static_cast<size_t>(Item::kShoes)];
  canvas.fill(rect(shoes_y, shoes_y + shoes_h, cx - 9, cx - 1), TopPattern::kSolid, attr.shoes_color, attr.shoes_color, &shoes_mask);
  canvas.fill(rect(shoes_y, shoes_y + shoes_h, cx + 1, cx + 9), TopPattern::kSolid, attr.shoes_color, attr.shoes_color, &shoes_mask);

  if (rule.hat) {
    ItemMask& hat_mask = s.masks[static_cast<size_t>(Item::kHead)];
    canvas.fill(rect(y0, y0 + 3, cx - 5, cx + 5), TopPattern::kSolid, attr.hat_color, attr.hat_color, &hat_mask);
    canvas.fill(rect(y0 + 3, y0 + 5, cx - 7, cx + 7), TopPattern::kSolid, attr.hat_color, attr.hat_color, &hat_mask);
  }

  // Look-alike clutter drawn flush against the body, never over it.
  for (int i = 0; i < n_distractors; ++i) {
    const Blob& b = blobs[static_cast<size_t>(i)];
    double half = 9.0, y_lo = shoes_y, h = shoes_h, w = 8.0;
    if (b.band == 0) {
      half = top_half;
      y_lo = top_y + b.dy;
      h = top_len * b.h / 12.0;
      w = b.w;
    } else if (b.band == 1) {
      half = rule.bottom_shape == BottomShape::kWide ? 12.0 : rule.bottom_shape == BottomShape::kSlim ? 8.0 : 14.5;
      y_lo = bottom_y + b.dy;
      h = bottom_len * b.h / 12.0;
      w = b.w;
    }
    const double x0 = b.left ? cx - half - b.gap - w : cx + half + b.gap;
    const double y1 = std::clamp(y_lo, 0.0, 64.0 - h);
    std::uniform_int_distribution<int> pick_color(0, static_cast<int>(std::size(kDistractorColors)) - 1);
    std::uniform_int_distribution<int> pick_pattern(0, 2);
    const Rgb c1 = jitter(kDistractorColors[pick_color(look)], hj, look);
    const Rgb c2 = jitter(kDistractorColors[pick_color(look)], hj, look);
    constexpr TopPattern kMimic[] = {TopPattern::kSolid, TopPattern::kStripes, TopPattern::kChecks};
    const TopPattern pattern = b.band == 0 ? kMimic[pick_pattern(look)] : TopPattern::kSolid;
    canvas.fill(rect(y1, y1 + h, std::max(0.0, x0), std::min(64.0, x0 + w)), pattern, c1, c2, nullptr, true);
  }

  if (rule.accessory != Accessory::kNone) {
    const bool left = rule.accessory == Accessory::kLeft;
    double by = top_y + 4.0 + bag_dy;
    if (rule.accessory == Accessory::kHigh) by = top_y - 2.0 + bag_dy;
    if (rule.accessory == Accessory::kLow) by = bottom_y + 8.0 + bag_dy;
    const double bx = left ? cx - body_half - 9.0 : cx + body_half + 2.0;
    const Rgb bag = jitter(palette::kBrown, hj, look);
    canvas.fill(rect(by, by + 8, bx, bx + 7), TopPattern::kSolid, bag, bag);
    canvas.fill(rect(by - 2, by, bx + 2, bx + 5), TopPattern::kSolid, palette::kBlack, palette::kBlack);
  }

  s.attributes = attr;
  s.image = std::move(canvas.image());
  for (float& v : s.image.pixels) v = static_cast<float>(to_byte(v)) / 255.0f;
  return s;
}

std::vector<Item> discriminative_items(const StyleRule& a, const StyleRule& b) {
  std::vector<Item> out;
  if (a.hat != b.hat || (a.hat && a.hat_color != b.hat_color)) out.push_back(Item::kHead);
  if (a.top_pattern != b.top_pattern || a.top_primary != b.top_primary ||
      (a.top_pattern != TopPattern::kSolid && a.top_secondary != b.top_secondary) || a.silhouette != b.silhouette) {
    out.push_back(Item::kTop);
  }
  if (a.bottom_shape != b.bottom_shape || a.bottom_color != b.bottom_color) out.push_back(Item::kBottom);
  if (a.shoes_color != b.shoes_color || a.high_shoes != b.high_shoes) out.push_back(Item::kShoes);
  return out;
}

int match_rule(const std::vector<StyleRule>& rules, const SampleAttributes& a) {
  int best = -1;
  float best_dist = std::numeric_limits<float>::infinity();
  for (const StyleRule& r : rules) {
    if (r.silhouette != a.silhouette || r.hat != a.hat || r.top_pattern != a.top_pattern || r.bottom_shape != a.bottom_shape ||
        r.high_shoes != a.high_shoes || r.accessory != a.accessory) {
      continue;
    }
    float d = color_distance(r.top_primary, a.top_primary) + color_distance(r.top_secondary, a.top_secondary) +
              color_distance(r.bottom_color, a.bottom_color) + color_distance(r.shoes_color, a.shoes_color);
    if (r.hat) d += color_distance(r.hat_color, a.hat_color);
    if (d < best_dist) {
      best_dist = d;
      best = r.index;
    }
  }
  return best;
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split '" + std::string(name) + "'");
}

int DatasetSpec::count(Split split, int label) const {
  const int base = split == Split::kTrain ? train_per_class : split == Split::kVal ? val_per_class : test_per_class;
  if (class_weights.empty()) return base;
  return static_cast<int>(std::lround(base * class_weights.at(static_cast<size_t>(label))));
}

void DatasetSpec::validate() const {
  const auto rules = rules_by_name(variant);
  if (num_classes < 2 || num_classes > static_cast<int>(rules.size())) {
    throw ConfigError("dataset: num_classes must lie in [2, " + std::to_string(rules.size()) + "]");
  }
  if (train_per_class < 1 || val_per_class < 1 || test_per_class < 1) throw ConfigError("dataset: per-class counts must be >= 1");
  if (!class_weights.empty()) {
    if (static_cast<int>(class_weights.size()) != num_classes) throw ConfigError("dataset: need one class weight per class");
    for (double w : class_weights) {
      if (!(w > 0.0)) throw ConfigError("dataset: class weights must be positive");
    }
  }
}

uint64_t sample_seed(uint64_t base, Split split, int label, int index) {
  uint64_t h = splitmix64(base);
  h = splitmix64(h ^ (static_cast<uint64_t>(split) + 1));
  h = splitmix64(h ^ static_cast<uint64_t>(label));
  return splitmix64(h ^ static_cast<uint64_t>(index));
}

std::string sample_id(Split split, int label, int index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%02d_%05d", std::string(split_name(split)).c_str(), label, index);
  return buf;
}

std::vector<SyntheticSample> generate_split(const DatasetSpec& spec, Split split) {
  spec.validate();
  const auto rules = rules_by_name(spec.variant);
  std::vector<SyntheticSample> out;
  for (int label = 0; label < spec.num_classes; ++label) {
    const int n = spec.count(split, label);
    for (int i = 0; i < n; ++i) {
      out.push_back(generate_sample(rules[static_cast<size_t>(label)], sample_seed(spec.seed, split, label, i), spec.generator,
                                    sample_id(split, label, i)));
    }
  }
  return out;
}

namespace {

KeyValueConfig spec_to_config(const DatasetSpec& spec) {
  KeyValueConfig c;
  c.set("variant", spec.variant);
  c.set("num_classes", static_cast<int64_t>(spec.num_classes));
  c.set("train_per_class", static_cast<int64_t>(spec.train_per_class));
  c.set("val_per_class", static_cast<int64_t>(spec.val_per_class));
  c.set("test_per_class", static_cast<int64_t>(spec.test_per_class));
  c.set("seed", std::to_string(spec.seed));
  c.set("height", spec.generator.height);
  c.set("width", spec.generator.width);
  c.set("min_distractors", static_cast<int64_t>(spec.generator.min_distractors));
  c.set("max_distractors", static_cast<int64_t>(spec.generator.max_distractors));
  c.set("speckle", format_float(spec.generator.speckle));
  c.set("hue_jitter", format_float(spec.generator.hue_jitter));
  if (!spec.class_weights.empty()) {
    std::string w;
    for (size_t i = 0; i < spec.class_weights.size(); ++i) w += (i ? ":" : "") + format_double(spec.class_weights[i]);
    c.set("class_weights", w);
  }
  return c;
}

}  // namespace

int64_t generate_dataset(const DatasetSpec& spec, const std::filesystem::path& root) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(root / "images", ec);
  if (!ec) std::filesystem::create_directories(root / "masks", ec);
  if (ec) throw IoError("cannot create dataset directory " + root.string() + ": " + ec.message());

  std::ostringstream manifest;
  manifest << "id,split,label,style_name\n";
  int64_t written = 0;
  for (Split split : {Split::kTrain, Split::kVal, Split::kTest}) {
    for (const SyntheticSample& s : generate_split(spec, split)) {
      write_ppm(root / "images" / (s.id + ".ppm"), s.image);
      save_masks(root / "masks", s.id, s.masks);
      manifest << s.id << ',' << split_name(split) << ',' << s.label << ',' << s.style_name << '\n';
      ++written;
    }
  }
  write_file_atomic(root / "dataset.cfg", spec_to_config(spec).serialize());
  write_file_atomic(root / "manifest.csv", manifest.str());
  return written;
}

DatasetSpec read_dataset_spec(const std::filesystem::path& root) {
  const auto path = root / "dataset.cfg";
  if (!std::filesystem::exists(path)) throw IoError("dataset config missing: " + path.string());
  const KeyValueConfig c = KeyValueConfig::load(path);
  DatasetSpec spec;
  spec.variant = c.get("variant", spec.variant);
  spec.num_classes = static_cast<int>(c.get_int("num_classes", spec.num_classes));
  spec.train_per_class = static_cast<int>(c.get_int("train_per_class", spec.train_per_class));
  spec.val_per_class = static_cast<int>(c.get_int("val_per_class", spec.val_per_class));
  spec.test_per_class = static_cast<int>(c.get_int("test_per_class", spec.test_per_class));
  spec.seed = std::stoull(c.get("seed", std::to_string(spec.seed)));
  spec.generator.height = c.get_int("height", spec.generator.height);
  spec.generator.width = c.get_int("width", spec.generator.width);
  spec.generator.min_distractors = static_cast<int>(c.get_int("min_distractors", spec.generator.min_distractors));
  spec.generator.max_distractors = static_cast<int>(c.get_int("max_distractors", spec.generator.max_distractors));
  spec.generator.speckle = static_cast<float>(c.get_double("speckle", spec.generator.speckle));
  spec.generator.hue_jitter = static_cast<float>(c.get_double("hue_jitter", spec.generator.hue_jitter));
  if (c.has("class_weights")) {
    std::stringstream ss(c.get("class_weights", ""));
    std::string tok;
    while (std::getline(ss, tok, ':')) spec.class_weights.push_back(std::stod(tok));
  }
  spec.validate();
  return spec;
}

std::vector<std::string> class_names(const DatasetSpec& spec) {
  const auto rules = rules_by_name(spec.variant);
  std::vector<std::string> names;
  for (int i = 0; i < spec.num_classes; ++i) names.push_back(rules[static_cast<size_t>(i)].name);
  return names;
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& root) {
  const auto path = root / "manifest.csv";
  if (!std::filesystem::exists(path)) throw IoError("manifest missing: " + path.string());
  std::stringstream ss(read_file(path));
  std::string line;
  std::getline(ss, line);
  if (line != "id,split,label,style_name") throw IoError(path.string() + ": unexpected header '" + line + "'");
  std::vector<ManifestRow> rows;
  int line_no = 1;
  while (std::getline(ss, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string id, split, label, name;
    if (!std::getline(ls, id, ',') || !std::getline(ls, split, ',') || !std::getline(ls, label, ',') || !std::getline(ls, name)) {
      throw IoError(path.string() + ": malformed line " + std::to_string(line_no));
    }
    try {
      rows.push_back({id, parse_split(split), std::stoi(label), name});
    } catch (const std::exception&) {
      throw IoError(path.string() + ": malformed line " + std::to_string(line_no));
    }
  }
  return rows;
}

std::vector<SyntheticSample> load_split(const std::filesystem::path& root, Split split) {
  const DatasetSpec spec = read_dataset_spec(root);
  FileSegmenter segmenter(root / "masks");
  std::vector<SyntheticSample> out;
  for (const ManifestRow& row : read_manifest(root)) {
    if (row.split != split) continue;
    if (row.label < 0 || row.label >= spec.num_classes) throw IoError("manifest label out of range for sample " + row.id);
    SyntheticSample s;
    s.id = row.id;
    s.label = row.label;
    s.style_name = row.style_name;
    s.image = read_ppm(root / "images" / (row.id + ".ppm"));
    s.masks = segmenter.segment(row.id, s.image);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace irsn
