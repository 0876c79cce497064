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
#include <vector>

#include "irsn/nn.hpp"
#include "irsn/tensor.hpp"

namespace irsn {

struct DfeStage {
  int64_t out_channels;
  int stride;
};

struct DfeConfig {
  std::vector<DfeStage> stages{{16, 2}, {32, 2}, {64, 2}, {64, 2}};
  int64_t input_h = 64;
  int64_t input_w = 64;

  int64_t channels() const;
  int64_t total_stride() const;
  int64_t out_h() const { return input_h / total_stride(); }
  int64_t out_w() const { return input_w / total_stride(); }
  void validate() const;
};

/// Trainable domain-specific extractor: a stack of 3x3 conv + ReLU stages.
class DomainFeatureExtractor {
 public:
  DomainFeatureExtractor() = default;
  DomainFeatureExtractor(const DfeConfig& config, std::mt19937_64& rng);

  /// x is [3,H,W] or [B,3,H,W]; returns [c,h,w] or [B,c,h,w].
  Tensor forward(const Tensor& x) const;
  /// Same as forward, also returning every stage output in order.
  Tensor forward(const Tensor& x, std::vector<Tensor>* stage_outputs) const;
  void collect(ParamList& out, const std::string& prefix) const;
  const DfeConfig& config() const { return config_; }

 private:
  DfeConfig config_;
  std::vector<Conv2d> stages_;
};

struct GfeConfig {
  int64_t dim = 512;
  uint64_t seed = 7;
};

/// Frozen general-feature extractor: conv encoder, global average pool, then
/// a linear map to D. Its parameters never require grad.
class GeneralFeatureExtractor {
 public:
  GeneralFeatureExtractor() = default;
  GeneralFeatureExtractor(const GfeConfig& config, int64_t input_h, int64_t input_w);

  /// Returns [D] or [B,D].
  Tensor forward(const Tensor& x) const;
  void collect(ParamList& out, const std::string& prefix) const;
  const GfeConfig& config() const { return config_; }

 private:
  GfeConfig config_;
  int64_t input_h_ = 0;
  int64_t input_w_ = 0;
  std::vector<Conv2d> convs_;
  Linear project_;
};

// Checks [3,H,W] / [B,3,H,W] against the expected resolution.
void check_image_input(const Tensor& x, int64_t h, int64_t w, const char* who);

}  // namespace irsn
