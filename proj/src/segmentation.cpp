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

#include "irsn/segmentation.hpp"

#include <numeric>
#include <stdexcept>

namespace irsn {

std::string_view item_name(Item item) {
  switch (item) {
    case Item::kHead: return "head";
    case Item::kTop: return "top";
    case Item::kBottom: return "bottom";
    case Item::kShoes: return "shoes";
  }
  return "unknown";
}

ItemMask ItemMask::empty(Item item, int64_t height, int64_t width) {
  return ItemMask{item, height, width, std::vector<uint8_t>(static_cast<size_t>(height * width), 0)};
}

double ItemMask::coverage() const {
  if (full.empty()) return 0.0;
  const int64_t ones = std::accumulate(full.begin(), full.end(), int64_t{0});
  return static_cast<double>(ones) / static_cast<double>(full.size());
}

std::vector<float> downsample_mask(const ItemMask& mask, int64_t h, int64_t w, MaskDownsample mode) {
  if (h < 1 || w < 1 || h > mask.height || w > mask.width) {
    throw std::invalid_argument("downsample_mask: cannot resample " + std::to_string(mask.height) + "x" +
                                std::to_string(mask.width) + " to " + std::to_string(h) + "x" + std::to_string(w));
  }
  std::vector<float> out(static_cast<size_t>(h * w));
  for (int64_t i = 0; i < h; ++i) {
    const int64_t y0 = (i * mask.height) / h, y1 = ((i + 1) * mask.height + h - 1) / h;
    for (int64_t j = 0; j < w; ++j) {
      const int64_t x0 = (j * mask.width) / w, x1 = ((j + 1) * mask.width + w - 1) / w;
      if (mode == MaskDownsample::kNearest) {
        out[i * w + j] = mask.full[static_cast<size_t>(((y0 + y1) / 2) * mask.width + (x0 + x1) / 2)];
        continue;
      }
      int64_t ones = 0;
      for (int64_t y = y0; y < y1; ++y) {
        for (int64_t x = x0; x < x1; ++x) ones += mask.full[static_cast<size_t>(y * mask.width + x)];
      }
      out[i * w + j] = static_cast<float>(static_cast<double>(ones) / static_cast<double>((y1 - y0) * (x1 - x0)));
    }
  }
  return out;
}

bool detect_absent(const ItemMask& mask, float tau) {
  if (!(tau >= 0.0f && tau < 1.0f)) throw std::invalid_argument("detect_absent: tau must lie in [0, 1)");
  return mask.coverage() < static_cast<double>(tau);
}

void OracleSegmenter::add(const std::string& sample_id, ItemMasks masks) { truth_[sample_id] = std::move(masks); }

ItemMasks OracleSegmenter::segment(const std::string& sample_id, const Image&) const {
  auto it = truth_.find(sample_id);
  if (it == truth_.end()) throw std::out_of_range("oracle segmenter: no ground truth for sample " + sample_id);
  return it->second;
}

ItemMasks FileSegmenter::segment(const std::string& sample_id, const Image& image) const {
  ItemMasks masks = load_masks(dir_, sample_id);
  for (const ItemMask& m : masks) {
    if (m.height != image.height || m.width != image.width) {
      throw IoError("mask " + mask_path(dir_, sample_id, m.item).string() + " does not match image resolution");
    }
  }
  return masks;
}

std::filesystem::path mask_path(const std::filesystem::path& dir, const std::string& sample_id, Item item) {
  return dir / (sample_id + "_" + std::string(item_name(item)) + ".pgm");
}

void save_masks(const std::filesystem::path& dir, const std::string& sample_id, const ItemMasks& masks) {
  for (const ItemMask& m : masks) {
    GrayImage g{m.height, m.width, std::vector<uint8_t>(m.full.size())};
    for (size_t i = 0; i < m.full.size(); ++i) g.pixels[i] = m.full[i] ? 255 : 0;
    write_pgm(mask_path(dir, sample_id, m.item), g);
  }
}

ItemMasks load_masks(const std::filesystem::path& dir, const std::string& sample_id) {
  ItemMasks masks;
  for (Item item : kItems) {
    const auto path = mask_path(dir, sample_id, item);
    if (!std::filesystem::exists(path)) throw IoError("missing mask file " + path.string());
    GrayImage g = read_pgm(path);
    ItemMask& m = masks[static_cast<size_t>(item)];
    m.item = item;
    m.height = g.height;
    m.width = g.width;
    m.full.resize(g.pixels.size());
    for (size_t i = 0; i < g.pixels.size(); ++i) m.full[i] = g.pixels[i] >= 128 ? 1 : 0;
  }
  return masks;
}

}  // namespace irsn
