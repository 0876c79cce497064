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

#include "irsn/feature_extractors.hpp"

#include <stdexcept>
#include <string>

#include "irsn/ops.hpp"

namespace irsn {

int64_t DfeConfig::channels() const { return stages.empty() ? 3 : stages.back().out_channels; }

int64_t DfeConfig::total_stride() const {
  int64_t s = 1;
  for (const DfeStage& st : stages) s *= st.stride;
  return s;
}

void DfeConfig::validate() const {
  if (stages.empty()) throw std::invalid_argument("dfe: at least one stage required");
  for (const DfeStage& st : stages) {
    if (st.out_channels < 1 || st.stride < 1) throw std::invalid_argument("dfe: stage channels and stride must be positive");
  }
  const int64_t s = total_stride();
  if (input_h < 1 || input_w < 1 || input_h % s != 0 || input_w % s != 0) {
    throw std::invalid_argument("dfe: total stride " + std::to_string(s) + " must divide input " + std::to_string(input_h) +
                                "x" + std::to_string(input_w));
  }
}

void check_image_input(const Tensor& x, int64_t h, int64_t w, const char* who) {
  const bool ok_rank = x.rank() == 3 || x.rank() == 4;
  if (!ok_rank || x.dim(-3) != 3 || x.dim(-2) != h || x.dim(-1) != w) {
    throw ShapeError(std::string(who) + ": expected [3," + std::to_string(h) + "," + std::to_string(w) +
                     "] or batched, got " + shape_str(x.shape()));
  }
}

DomainFeatureExtractor::DomainFeatureExtractor(const DfeConfig& config, std::mt19937_64& rng) : config_(config) {
  config_.validate();
  int64_t in = 3;
  for (const DfeStage& st : config_.stages) {
    stages_.emplace_back(in, st.out_channels, 3, st.stride, 1, rng);
    in = st.out_channels;
  }
}

Tensor DomainFeatureExtractor::forward(const Tensor& x) const { return forward(x, nullptr); }

Tensor DomainFeatureExtractor::forward(const Tensor& x, std::vector<Tensor>* stage_outputs) const {
  check_image_input(x, config_.input_h, config_.input_w, "dfe");
  Tensor h = x;
  for (const Conv2d& conv : stages_) {
    h = relu(conv.forward(h));
    if (stage_outputs) stage_outputs->push_back(h);
  }
  return h;
}

void DomainFeatureExtractor::collect(ParamList& out, const std::string& prefix) const {
  for (size_t i = 0; i < stages_.size(); ++i) stages_[i].collect(out, prefix + ".stage" + std::to_string(i));
}

GeneralFeatureExtractor::GeneralFeatureExtractor(const GfeConfig& config, int64_t input_h, int64_t input_w)
    : config_(config), input_h_(input_h), input_w_(input_w) {
  if (config_.dim < 1) throw std::invalid_argument("gfe: output dimension must be positive");
  std::mt19937_64 rng(config_.seed);
  const int64_t widths[] = {16, 32, 64};
  int64_t in = 3;
  int64_t h = input_h, w = input_w;
  for (int64_t c : widths) {
    if (h < 2 || w < 2) break;
    convs_.emplace_back(in, c, 3, 2, 1, rng, /*requires_grad=*/false);
    in = c;
    h = (h + 1) / 2;
    w = (w + 1) / 2;
  }
  project_ = Linear(in, config_.dim, rng, /*requires_grad=*/false);
}

Tensor GeneralFeatureExtractor::forward(const Tensor& x) const {
  check_image_input(x, input_h_, input_w_, "gfe");
  Tensor h = x;
  for (const Conv2d& conv : convs_) h = relu(conv.forward(h));
  const bool batched = h.rank() == 4;
  const int64_t c = h.dim(-3);
  Tensor pooled = adaptive_avg_pool2d(h, 1, 1);
  pooled = reshape(pooled, batched ? Shape{h.dim(0), c} : Shape{c});
  return project_.forward(pooled);
}

void GeneralFeatureExtractor::collect(ParamList& out, const std::string& prefix) const {
  for (size_t i = 0; i < convs_.size(); ++i) convs_[i].collect(out, prefix + ".conv" + std::to_string(i));
  project_.collect(out, prefix + ".project");
}

}  // namespace irsn
