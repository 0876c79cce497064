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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "irsn/image_io.hpp"

namespace irsn {

enum class Item { kHead = 0, kTop = 1, kBottom = 2, kShoes = 3 };
inline constexpr int kNumItems = 4;
inline constexpr std::array<Item, kNumItems> kItems{Item::kHead, Item::kTop, Item::kBottom, Item::kShoes};

std::string_view item_name(Item item);

inline constexpr float kDefaultAbsentTau = 0.005f;

/// Full-resolution binary region mask for one item.
struct ItemMask {
  Item item = Item::kHead;
  int64_t height = 0;
  int64_t width = 0;
  std::vector<uint8_t> full;  // entries in {0,1}, row-major

  static ItemMask empty(Item item, int64_t height, int64_t width);
  double coverage() const;
  bool operator==(const ItemMask&) const = default;
};

using ItemMasks = std::array<ItemMask, kNumItems>;

enum class MaskDownsample { kArea, kNearest };

/// Area-average downsampling (adaptive-pool windows) to h x w. Each value is
/// the fraction of its window covered by the mask. kNearest samples the
/// window-center pixel instead.
std::vector<float> downsample_mask(const ItemMask& mask, int64_t h, int64_t w,
                                   MaskDownsample mode = MaskDownsample::kArea);

/// True iff coverage < tau.
bool detect_absent(const ItemMask& mask, float tau = kDefaultAbsentTau);

class Segmenter {
 public:
  virtual ~Segmenter() = default;
  /// Always four masks in head, top, bottom, shoes order.
  virtual ItemMasks segment(const std::string& sample_id, const Image& image) const = 0;
};

/// Returns the ground-truth masks registered for each sample id.
class OracleSegmenter : public Segmenter {
 public:
  OracleSegmenter() = default;
  void add(const std::string& sample_id, ItemMasks masks);
  ItemMasks segment(const std::string& sample_id, const Image& image) const override;

 private:
  std::unordered_map<std::string, ItemMasks> truth_;
};

/// Loads <dir>/<sample_id>_<item>.pgm (255 inside, 0 outside).
class FileSegmenter : public Segmenter {
 public:
  explicit FileSegmenter(std::filesystem::path dir) : dir_(std::move(dir)) {}
  ItemMasks segment(const std::string& sample_id, const Image& image) const override;

 private:
  std::filesystem::path dir_;
};

std::filesystem::path mask_path(const std::filesystem::path& dir, const std::string& sample_id, Item item);
void save_masks(const std::filesystem::path& dir, const std::string& sample_id, const ItemMasks& masks);
ItemMasks load_masks(const std::filesystem::path& dir, const std::string& sample_id);

}  // namespace irsn
