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
#include <random>
#include <string>
#include <vector>

#include "irsn/tensor.hpp"

namespace irsn {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};
using ParamList = std::vector<NamedTensor>;

/// Fills with U(-sqrt(6/fan_in), sqrt(6/fan_in)).
Tensor he_uniform(Shape shape, int64_t fan_in, std::mt19937_64& rng, bool requires_grad = true);
Tensor normal_init(Shape shape, float stddev, std::mt19937_64& rng, bool requires_grad = true);

/// y = x W + b with W stored [in, out].
class Linear {
 public:
  Linear() = default;
  Linear(int64_t in, int64_t out, std::mt19937_64& rng, bool requires_grad = true);
  Tensor forward(const Tensor& x) const;
  void collect(ParamList& out, const std::string& prefix) const;

  Tensor weight;
  Tensor bias;
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int64_t in, int64_t out, int kernel, int stride, int padding, std::mt19937_64& rng, bool requires_grad = true);
  Tensor forward(const Tensor& x) const;
  void collect(ParamList& out, const std::string& prefix) const;

  Tensor weight;
  Tensor bias;
  int stride = 1;
  int padding = 0;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  explicit LayerNorm(int64_t dim);
  Tensor forward(const Tensor& x) const;
  void collect(ParamList& out, const std::string& prefix) const;

  Tensor gamma;
  Tensor beta;
};

/// Pre-norm transformer block over [B, T, D] tokens:
/// x + Attn(LN(x)), then + MLP(LN(.)).
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(int64_t dim, int heads, int mlp_ratio, std::mt19937_64& rng);
  Tensor forward(const Tensor& x) const;
  void collect(ParamList& out, const std::string& prefix) const;

  int heads = 1;
  LayerNorm norm1, norm2;
  Linear qkv, proj, fc1, fc2;
};

}  // namespace irsn
