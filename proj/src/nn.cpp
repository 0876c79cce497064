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

#include "irsn/nn.hpp"

#include <cmath>

#include "irsn/ops.hpp"

namespace irsn {

Tensor he_uniform(Shape shape, int64_t fan_in, std::mt19937_64& rng, bool requires_grad) {
  const float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
  std::uniform_real_distribution<float> dist(-bound, bound);
  std::vector<float> values(static_cast<size_t>(shape_numel(shape)));
  for (float& v : values) v = dist(rng);
  return Tensor::from_data(std::move(shape), std::move(values), requires_grad);
}

Tensor normal_init(Shape shape, float stddev, std::mt19937_64& rng, bool requires_grad) {
  std::normal_distribution<float> dist(0.0f, stddev);
  std::vector<float> values(static_cast<size_t>(shape_numel(shape)));
  for (float& v : values) v = dist(rng);
  return Tensor::from_data(std::move(shape), std::move(values), requires_grad);
}

Linear::Linear(int64_t in, int64_t out, std::mt19937_64& rng, bool requires_grad)
    : weight(he_uniform({in, out}, in, rng, requires_grad)), bias(Tensor::zeros({out}, requires_grad)) {}

Tensor Linear::forward(const Tensor& x) const {
  if (x.rank() == 1) return reshape(forward(reshape(x, {1, x.dim(0)})), {weight.dim(1)});
  return add(matmul(x, weight), bias);
}

void Linear::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

Conv2d::Conv2d(int64_t in, int64_t out, int kernel, int stride_, int padding_, std::mt19937_64& rng, bool requires_grad)
    : weight(he_uniform({out, in, kernel, kernel}, in * kernel * kernel, rng, requires_grad)),
      bias(Tensor::zeros({out}, requires_grad)),
      stride(stride_),
      padding(padding_) {}

Tensor Conv2d::forward(const Tensor& x) const { return conv2d(x, weight, bias, stride, padding); }

void Conv2d::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

LayerNorm::LayerNorm(int64_t dim) : gamma(Tensor::ones({dim}, true)), beta(Tensor::zeros({dim}, true)) {}

Tensor LayerNorm::forward(const Tensor& x) const { return layer_norm(x, gamma, beta); }

void LayerNorm::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".gamma", gamma});
  out.push_back({prefix + ".beta", beta});
}

TransformerBlock::TransformerBlock(int64_t dim, int heads_, int mlp_ratio, std::mt19937_64& rng)
    : heads(heads_),
      norm1(dim),
      norm2(dim),
      qkv(dim, 3 * dim, rng),
      proj(dim, dim, rng),
      fc1(dim, mlp_ratio * dim, rng),
      fc2(mlp_ratio * dim, dim, rng) {
  if (heads < 1 || dim % heads != 0) {
    throw std::invalid_argument("transformer block: dim " + std::to_string(dim) + " not divisible by " +
                                std::to_string(heads) + " heads");
  }
}

Tensor TransformerBlock::forward(const Tensor& x) const {
  const int64_t batch = x.dim(0), tokens = x.dim(1), dim = x.dim(2);
  const int64_t head_dim = dim / heads;

  // [B,T,3D] -> [3, B, H, T, dh]
  Tensor packed = qkv.forward(norm1.forward(x));
  packed = permute(reshape(packed, {batch, tokens, 3, heads, head_dim}), {2, 0, 3, 1, 4});
  const int64_t per = batch * heads * tokens * head_dim;
  packed = reshape(packed, {3, per});
  Tensor q = reshape(slice(packed, 0, 0, 1), {batch * heads, tokens, head_dim});
  Tensor k = reshape(slice(packed, 0, 1, 1), {batch * heads, tokens, head_dim});
  Tensor v = reshape(slice(packed, 0, 2, 1), {batch * heads, tokens, head_dim});

  Tensor scores = scale(matmul(q, transpose_last2(k)), 1.0f / std::sqrt(static_cast<float>(head_dim)));
  Tensor mixed = matmul(softmax(scores), v);
  mixed = reshape(permute(reshape(mixed, {batch, heads, tokens, head_dim}), {0, 2, 1, 3}), {batch, tokens, dim});
  Tensor h = add(x, proj.forward(mixed));
  return add(h, fc2.forward(gelu(fc1.forward(norm2.forward(h)))));
}

void TransformerBlock::collect(ParamList& out, const std::string& prefix) const {
  norm1.collect(out, prefix + ".norm1");
  qkv.collect(out, prefix + ".qkv");
  proj.collect(out, prefix + ".proj");
  norm2.collect(out, prefix + ".norm2");
  fc1.collect(out, prefix + ".fc1");
  fc2.collect(out, prefix + ".fc2");
}

}  // namespace irsn
