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

#include "irsn/model.hpp"

#include <algorithm>
#include <stdexcept>

#include "irsn/ops.hpp"

namespace irsn {

int64_t IrsnConfig::fusion_dim() const {
  const int64_t c = dfe.channels();
  int64_t dim = c * aap_h * aap_w;
  if (use_gfe) dim += gfe.dim;
  if (use_irp) dim += kNumItems * c;
  return dim;
}

void IrsnConfig::validate() const {
  dfe.validate();
  if (num_classes < 2) throw std::invalid_argument("model: need at least 2 classes");
  if (aap_h < 1 || aap_w < 1) throw std::invalid_argument("model: AAP resolution must be positive");
  if (head_hidden < 1) throw std::invalid_argument("model: head width must be positive");
  if (use_gfe && gfe.dim < 1) throw std::invalid_argument("model: GFE dimension must be positive");
  if (encoder.blocks < 0 || encoder.mlp_ratio < 1) throw std::invalid_argument("model: invalid item encoder config");
  if (encoder.heads < 1 || dfe.channels() % encoder.heads != 0) {
    throw std::invalid_argument("model: channels " + std::to_string(dfe.channels()) + " not divisible by " +
                                std::to_string(encoder.heads) + " heads");
  }
  if (!(absent_tau >= 0.0f && absent_tau < 1.0f)) throw std::invalid_argument("model: absent tau must lie in [0, 1)");
}

Tensor item_region_pool(const Tensor& domain_map, const Tensor& region_map) {
  const int64_t h = domain_map.dim(-2), w = domain_map.dim(-1);
  if (region_map.dim(-2) != h || region_map.dim(-1) != w || (region_map.rank() > 1 && region_map.rank() > domain_map.rank()) ||
      (region_map.rank() >= 3 && region_map.dim(-3) != 1)) {
    throw ShapeError("item region pooling: region map " + shape_str(region_map.shape()) + " does not match feature map " +
                     shape_str(domain_map.shape()));
  }
  return mul(domain_map, region_map);
}

Tensor apply_absence(const Tensor& importance, const Tensor& presence) { return mul(importance, presence); }

ItemFeatures apply_absence(ItemFeatures features, bool absent) {
  if (!absent) return features;
  // A constant zero map: no history, so nothing flows back through a_i.
  features.importance = Tensor::zeros(features.importance.shape());
  std::fill(features.absent.begin(), features.absent.end(), true);
  return features;
}

Tensor gated_feature_fusion(const std::vector<ItemFeatures>& items) {
  if (items.size() != static_cast<size_t>(kNumItems)) {
    throw std::invalid_argument("gated feature fusion: expected 4 items, got " + std::to_string(items.size()));
  }
  std::vector<Tensor> slices;
  for (size_t i = 0; i < items.size(); ++i) {
    if (items[i].item != kItems[i]) throw std::invalid_argument("gated feature fusion: items must be ordered head, top, bottom, shoes");
    Tensor gated = mul(items[i].encoded, items[i].importance);
    const bool batched = gated.rank() == 4;
    const int64_t c = gated.dim(-3);
    Tensor pooled = adaptive_avg_pool2d(gated, 1, 1);
    slices.push_back(reshape(pooled, batched ? Shape{gated.dim(0), c} : Shape{c}));
  }
  return concat(slices, -1);
}

int predict_style(std::span<const float> logits) {
  if (logits.empty()) throw std::invalid_argument("predict_style: empty logits");
  int best = 0;
  for (size_t k = 1; k < logits.size(); ++k) {
    if (logits[k] > logits[static_cast<size_t>(best)]) best = static_cast<int>(k);
  }
  return best;
}

std::vector<int> predict_styles(const Tensor& logits) {
  const int64_t k = logits.dim(-1);
  const int64_t rows = logits.numel() / k;
  std::vector<int> out;
  for (int64_t r = 0; r < rows; ++r) out.push_back(predict_style(logits.data().subspan(static_cast<size_t>(r * k), static_cast<size_t>(k))));
  return out;
}

ItemEncoder::ItemEncoder(int64_t channels, int64_t h, int64_t w, const ItemEncoderConfig& config, std::mt19937_64& rng)
    : channels_(channels), h_(h), w_(w) {
  positional = normal_init({h * w, channels}, 0.02f, rng);
  for (int b = 0; b < config.blocks; ++b) blocks.emplace_back(channels, config.heads, config.mlp_ratio, rng);
  importance = Linear(channels, channels, rng);
}

std::pair<Tensor, Tensor> ItemEncoder::forward(const Tensor& f) const {
  const bool batched = f.rank() == 4;
  Tensor x = batched ? f : reshape(f, {1, f.dim(0), f.dim(1), f.dim(2)});
  const int64_t batch = x.dim(0);
  if (x.dim(1) != channels_ || x.dim(2) != h_ || x.dim(3) != w_) {
    throw ShapeError("item encoder: expected [c=" + std::to_string(channels_) + ", " + std::to_string(h_) + ", " +
                     std::to_string(w_) + "], got " + shape_str(f.shape()));
  }
  const int64_t tokens = h_ * w_;
  Tensor t = permute(reshape(x, {batch, channels_, tokens}), {0, 2, 1});
  t = add(t, positional);
  for (const TransformerBlock& block : blocks) t = block.forward(t);
  auto to_map = [&](const Tensor& tok) {
    Tensor m = reshape(permute(tok, {0, 2, 1}), {batch, channels_, h_, w_});
    return batched ? m : reshape(m, {channels_, h_, w_});
  };
  Tensor gate = sigmoid(importance.forward(t));
  return {to_map(t), to_map(gate)};
}

void ItemEncoder::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".positional", positional});
  for (size_t b = 0; b < blocks.size(); ++b) blocks[b].collect(out, prefix + ".block" + std::to_string(b));
  importance.collect(out, prefix + ".importance");
}

IrsnModel::IrsnModel(const IrsnConfig& config) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  dfe_ = DomainFeatureExtractor(config_.dfe, rng);
  gfe_ = GeneralFeatureExtractor(config_.gfe, config_.dfe.input_h, config_.dfe.input_w);
  const int64_t c = config_.dfe.channels();
  if (config_.use_irp) {
    for (int i = 0; i < kNumItems; ++i) {
      encoders_.emplace_back(c, config_.dfe.out_h(), config_.dfe.out_w(), config_.encoder, rng);
    }
  }
  head1_ = Linear(config_.fusion_dim(), config_.head_hidden, rng);
  head2_ = Linear(config_.head_hidden, config_.num_classes, rng);
}

Tensor IrsnModel::general_features(const Tensor& images) const { return gfe_.forward(images); }

ModelInput IrsnModel::make_input(const Tensor& images, std::span<const ItemMasks> masks) const {
  check_image_input(images, config_.dfe.input_h, config_.dfe.input_w, "irsn");
  Tensor batched = images.rank() == 4 ? images : reshape(images.detach(), {1, 3, images.dim(1), images.dim(2)});
  const int64_t batch = batched.dim(0);
  if (static_cast<int64_t>(masks.size()) != batch) throw ShapeError("irsn: mask count does not match batch size");
  const int64_t h = config_.dfe.out_h(), w = config_.dfe.out_w();
  ModelInput input;
  input.images = batched;
  for (int i = 0; i < kNumItems; ++i) {
    std::vector<float> maps;
    std::vector<float> present;
    maps.reserve(static_cast<size_t>(batch * h * w));
    for (int64_t b = 0; b < batch; ++b) {
      const ItemMask& m = masks[static_cast<size_t>(b)][static_cast<size_t>(i)];
      if (m.height != config_.dfe.input_h || m.width != config_.dfe.input_w) throw ShapeError("irsn: mask resolution mismatch");
      auto down = downsample_mask(m, h, w, config_.mask_downsample);
      maps.insert(maps.end(), down.begin(), down.end());
      present.push_back(detect_absent(m, config_.absent_tau) ? 0.0f : 1.0f);
    }
    input.item_maps[static_cast<size_t>(i)] = Tensor::from_data({batch, 1, h, w}, std::move(maps));
    input.presence[static_cast<size_t>(i)] = Tensor::from_data({batch, 1, 1, 1}, std::move(present));
  }
  return input;
}

ForwardResult IrsnModel::forward(const ModelInput& input) const {
  ForwardResult out;
  const Tensor& images = input.images;
  check_image_input(images, config_.dfe.input_h, config_.dfe.input_w, "irsn");
  if (images.rank() != 4) throw ShapeError("irsn: forward expects a batched [B,3,H,W] input");
  const int64_t batch = images.dim(0);
  out.domain_map = dfe_.forward(images, &out.dfe_stages);
  const Tensor& d = out.domain_map;
  const int64_t c = d.dim(1), h = d.dim(2), w = d.dim(3);

  std::vector<Tensor> parts;
  {
    // Zero-pad bottom/right when the AAP grid is finer than the map.
    const int64_t ph = std::max<int64_t>(0, config_.aap_h - h);
    const int64_t pw = std::max<int64_t>(0, config_.aap_w - w);
    Tensor src = (ph || pw) ? pad2d(d, 0, ph, 0, pw) : d;
    parts.push_back(reshape(adaptive_avg_pool2d(src, config_.aap_h, config_.aap_w), {batch, c * config_.aap_h * config_.aap_w}));
  }
  if (config_.use_gfe) {
    Tensor g = input.general_features.defined() ? input.general_features : gfe_.forward(images);
    if (g.rank() != 2 || g.dim(0) != batch || g.dim(1) != config_.gfe.dim) {
      throw ShapeError("irsn: general features " + shape_str(g.shape()) + " do not match batch/D");
    }
    parts.push_back(g);
  }
  if (config_.use_irp) {
    for (int i = 0; i < kNumItems; ++i) {
      const Tensor& region = input.item_maps[static_cast<size_t>(i)];
      const Tensor& presence = input.presence[static_cast<size_t>(i)];
      if (!region.defined() || !presence.defined()) throw std::invalid_argument("irsn: missing item maps in model input");
      ItemFeatures f;
      f.item = kItems[static_cast<size_t>(i)];
      f.pooled = item_region_pool(d, region);
      auto [encoded, gate] = encoders_[static_cast<size_t>(i)].forward(f.pooled);
      f.encoded = encoded;
      if (config_.fusion == FusionMode::kGated) {
        f.importance = apply_absence(gate, presence);
      } else {
        f.importance = Tensor::ones({batch, c, h, w});
      }
      for (float p : presence.data()) f.absent.push_back(p == 0.0f);
      out.items.push_back(std::move(f));
    }
    out.gff = gated_feature_fusion(out.items);
    parts.push_back(out.gff);
  }
  out.fused = concat(parts, 1);
  out.logits = head2_.forward(gelu(head1_.forward(out.fused)));
  return out;
}

ParamList IrsnModel::named_parameters() const {
  ParamList params;
  dfe_.collect(params, "dfe");
  gfe_.collect(params, "gfe");
  for (size_t i = 0; i < encoders_.size(); ++i) {
    encoders_[i].collect(params, "encoder." + std::string(item_name(kItems[i])));
  }
  head1_.collect(params, "head.hidden");
  head2_.collect(params, "head.out");
  return params;
}

std::vector<Tensor> IrsnModel::trainable_parameters() const {
  std::vector<Tensor> out;
  for (const NamedTensor& p : named_parameters()) {
    if (p.tensor.requires_grad()) out.push_back(p.tensor);
  }
  return out;
}

int64_t IrsnModel::trainable_parameter_count() const {
  int64_t n = 0;
  for (const Tensor& t : trainable_parameters()) n += t.numel();
  return n;
}

}  // namespace irsn
