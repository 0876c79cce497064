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
#include <span>
#include <string>
#include <vector>

#include "irsn/image_io.hpp"
#include "irsn/model.hpp"
#include "irsn/segmentation.hpp"

namespace irsn {

/// Non-negative map, max-normalized to [0,1] unless all zero.
struct SaliencyMap {
  int64_t height = 0;
  int64_t width = 0;
  std::vector<float> values;
  int target = 0;
  std::string tap;

  float at(int64_t y, int64_t x) const { return values[static_cast<size_t>(y * width + x)]; }
};

/// Signed difference map, symmetric-normalized to [-1,1] unless all zero.
struct DiffMap {
  int64_t height = 0;
  int64_t width = 0;
  std::vector<float> values;
  int target = 0;

  float at(int64_t y, int64_t x) const { return values[static_cast<size_t>(y * width + x)]; }
};

struct CamOptions {
  std::string tap = "dfe";  // "dfe" (the final domain map) or "dfe.stageN"
  bool upsample = true;     // bilinear to the input resolution
  bool normalize = true;
};

struct DiffOptions {
  std::string tap = "dfe";
  bool upsample = true;
  bool normalize_before_subtract = false;
};

/// Picks the tap tensor out of a forward pass; throws std::invalid_argument if it is not a [B,C,h,w] map.
Tensor select_tap(const ForwardResult& forward, const std::string& tap);

/// ReLU(sum_k alpha_k A_k) with alpha_k the spatial mean of dScore/dA_k. `activations` and
/// `gradients` are [C,h,w] (one sample); the result is un-normalized.
std::vector<float> cam_from_gradients(const Tensor& activations, std::span<const float> gradients);

void normalize_max(std::vector<float>& values);
void normalize_symmetric(std::vector<float>& values);

/// Bilinear resize with half-pixel centers and edge clamping.
std::vector<float> bilinear_resize(std::span<const float> values, int64_t h, int64_t w, int64_t out_h, int64_t out_w);

/// One map per batch element; targets[b] is the class whose raw logit is differentiated.
std::vector<SaliencyMap> grad_cam(const IrsnModel& model, const ModelInput& input, std::span<const int> targets,
                                  const CamOptions& options = {});
SaliencyMap grad_cam(const IrsnModel& model, const ModelInput& input, int target, const CamOptions& options = {});

/// cam_a - cam_b per batch element. Throws ShapeError if the two maps differ in size.
std::vector<DiffMap> grad_cam_diff(const IrsnModel& model_a, const IrsnModel& model_b, const ModelInput& input,
                                   std::span<const int> targets, const DiffOptions& options = {});

/// |diff| multiplied into the image, channel by channel. Sizes must agree.
Image diff_overlay(const Image& image, const DiffMap& diff);
/// Rows of comma-separated values.
std::string map_csv(std::span<const float> values, int64_t height, int64_t width);

struct MaskMass {
  double inside = 0.0;
  double outside = 0.0;
};

/// Sums the positive part of `values` inside and outside the union of `masks`.
MaskMass positive_mass(std::span<const float> values, int64_t height, int64_t width, const std::vector<ItemMask>& masks);

}  // namespace irsn
