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
#include <span>
#include <vector>

#include "irsn/tensor.hpp"

namespace irsn {

enum class BinaryKind { kAdd, kSub, kMul };

// Element-wise op with right-aligned broadcasting: a size-1 (or missing)
// axis on either side repeats across the other operand's extent.
Tensor ew_binary(const Tensor& a, const Tensor& b, BinaryKind kind);
inline Tensor add(const Tensor& a, const Tensor& b) { return ew_binary(a, b, BinaryKind::kAdd); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return ew_binary(a, b, BinaryKind::kSub); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return ew_binary(a, b, BinaryKind::kMul); }
inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

Tensor scale(const Tensor& x, float factor);

/// [m,k]x[k,n], [B,m,k]x[k,n] or [B,m,k]x[B,k,n].
Tensor matmul(const Tensor& a, const Tensor& b);

/// Cross-correlation with zero padding. x is [C,H,W] or [B,C,H,W]; kernels
/// [O,C,kh,kw]; bias optional [O].
Tensor conv2d(const Tensor& x, const Tensor& kernels, const Tensor& bias, int stride, int padding);

enum class Activation { kSigmoid, kGelu, kRelu, kSoftmaxLastDim };
Tensor activation(const Tensor& x, Activation kind);
inline Tensor sigmoid(const Tensor& x) { return activation(x, Activation::kSigmoid); }
inline Tensor gelu(const Tensor& x) { return activation(x, Activation::kGelu); }
inline Tensor relu(const Tensor& x) { return activation(x, Activation::kRelu); }
inline Tensor softmax(const Tensor& x) { return activation(x, Activation::kSoftmaxLastDim); }

/// Normalizes over the last axis, then applies gamma/beta (shape [last]).
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps = 1e-5f);

/// Averages windows [floor(i*h/oh), ceil((i+1)*h/oh)) over the two trailing
/// spatial axes of a [C,H,W] or [B,C,H,W] tensor.
Tensor adaptive_avg_pool2d(const Tensor& x, int64_t out_h, int64_t out_w);

/// Zero padding on the trailing two axes.
Tensor pad2d(const Tensor& x, int64_t top, int64_t bottom, int64_t left, int64_t right);

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<int>& order);
Tensor transpose_last2(const Tensor& x);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& x, int axis, int64_t start, int64_t length);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Mean over the batch of -sum_k q_k log softmax(logits)_k with
/// q = (1 - eps) * onehot(label) + eps / K. logits is [B,K] or [K].
Tensor cross_entropy_label_smooth(const Tensor& logits, std::span<const int> labels, float eps);

/// Entropy of the smoothed target distribution; lower bound on the loss.
double smoothed_target_entropy(int num_classes, float eps);

}  // namespace irsn
