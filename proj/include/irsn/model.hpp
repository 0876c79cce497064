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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "irsn/feature_extractors.hpp"
#include "irsn/nn.hpp"
#include "irsn/segmentation.hpp"
#include "irsn/tensor.hpp"

namespace irsn {

enum class FusionMode { kGated, kPlainConcat };

struct ItemEncoderConfig {
  int blocks = 1;
  int heads = 2;
  int mlp_ratio = 2;
};

struct IrsnConfig {
  DfeConfig dfe;
  GfeConfig gfe;
  ItemEncoderConfig encoder;
  int64_t aap_h = 5;
  int64_t aap_w = 3;
  int64_t head_hidden = 256;
  int num_classes = 10;
  FusionMode fusion = FusionMode::kGated;
  bool use_irp = true;
  bool use_gfe = true;
  MaskDownsample mask_downsample = MaskDownsample::kArea;
  float absent_tau = kDefaultAbsentTau;
  uint64_t seed = 42;

  /// Width of the vector fed to the MLP head.
  int64_t fusion_dim() const;
  void validate() const;
};

/// One item's tensors, batched: f, h, a are [B,c,h,w].
struct ItemFeatures {
  Item item = Item::kHead;
  Tensor pooled;      // f_i
  Tensor encoded;     // h_i
  Tensor importance;  // a_i
  std::vector<bool> absent;
};

/// Inputs for a batch. item_maps[i] is the downsampled region map [B,1,h,w];
/// presence[i] is [B,1,1,1] holding 1 for present, 0 for absent items.
struct ModelInput {
  Tensor images;  // [B,3,H,W]
  std::array<Tensor, kNumItems> item_maps;
  std::array<Tensor, kNumItems> presence;
  Tensor general_features;  // optional cached GFE output [B,D]
};

struct ForwardResult {
  Tensor logits;         // [B,K]
  Tensor domain_map;     // d_x [B,c,h,w]
  Tensor fused;          // MLP input [B, fusion_dim]
  Tensor gff;            // [B,4c] when IRP is on
  std::vector<ItemFeatures> items;
  std::vector<Tensor> dfe_stages;
};

/// f_i = broadcast(m_down) * d_x. m_down is [h,w], [1,h,w] or [B,1,h,w].
Tensor item_region_pool(const Tensor& domain_map, const Tensor& region_map);

/// If absent, replaces the importance map with exact zeros (no gradient).
/// `presence` is the [B,1,1,1] 0/1 gate used for batched inputs.
Tensor apply_absence(const Tensor& importance, const Tensor& presence);
ItemFeatures apply_absence(ItemFeatures features, bool absent);

/// Concat over items of GAP(h_i * a_i); items must be head, top, bottom, shoes.
Tensor gated_feature_fusion(const std::vector<ItemFeatures>& items);

/// argmax with ties broken toward the lowest index.
int predict_style(std::span<const float> logits);
std::vector<int> predict_styles(const Tensor& logits);

/// Transformer item encoder: tokens are the h*w positions of f_i (dim c)
/// plus a learned positional encoding. Emits h_i and sigmoid a_i.
class ItemEncoder {
 public:
  ItemEncoder() = default;
  ItemEncoder(int64_t channels, int64_t h, int64_t w, const ItemEncoderConfig& config, std::mt19937_64& rng);

  /// f is [B,c,h,w] (or [c,h,w]); returns {h_i, a_i} with the same shape.
  std::pair<Tensor, Tensor> forward(const Tensor& f) const;
  void collect(ParamList& out, const std::string& prefix) const;

  Tensor positional;  // [h*w, c]
  std::vector<TransformerBlock> blocks;
  Linear importance;

 private:
  int64_t channels_ = 0, h_ = 0, w_ = 0;
};

class IrsnModel {
 public:
  explicit IrsnModel(const IrsnConfig& config);

  const IrsnConfig& config() const { return config_; }

  ForwardResult forward(const ModelInput& input) const;
  Tensor general_features(const Tensor& images) const;

  /// Downsamples masks and evaluates absence for a batch of samples.
  ModelInput make_input(const Tensor& images, std::span<const ItemMasks> masks) const;

  /// Every parameter in checkpoint order, frozen GFE weights included.
  ParamList named_parameters() const;
  std::vector<Tensor> trainable_parameters() const;
  int64_t trainable_parameter_count() const;

  const DomainFeatureExtractor& dfe() const { return dfe_; }
  const GeneralFeatureExtractor& gfe() const { return gfe_; }
  const std::vector<ItemEncoder>& encoders() const { return encoders_; }
  const Linear& head_hidden() const { return head1_; }
  const Linear& head_out() const { return head2_; }

 private:
  IrsnConfig config_;
  DomainFeatureExtractor dfe_;
  GeneralFeatureExtractor gfe_;
  std::vector<ItemEncoder> encoders_;
  Linear head1_, head2_;
};

}  // namespace irsn
