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

#include "irsn/optim.hpp"

#include <stdexcept>
#include <string>

namespace irsn {

void sgd_momentum_step(std::vector<Tensor>& params, std::vector<std::vector<float>>& velocity, float learning_rate,
                       float momentum) {
  if (params.size() != velocity.size()) {
    throw ShapeError("sgd: " + std::to_string(params.size()) + " parameters but " + std::to_string(velocity.size()) +
                     " velocity buffers");
  }
  for (size_t p = 0; p < params.size(); ++p) {
    Tensor& w = params[p];
    std::vector<float>& v = velocity[p];
    if (static_cast<int64_t>(v.size()) != w.numel()) {
      throw ShapeError("sgd: velocity buffer size mismatch for parameter of shape " + shape_str(w.shape()));
    }
    auto data = w.data();
    const bool has_grad = w.has_grad();
    auto grad = w.grad();
    for (size_t i = 0; i < v.size(); ++i) {
      v[i] = momentum * v[i] + (has_grad ? grad[i] : 0.0f);
      data[i] -= learning_rate * v[i];
    }
  }
}

SgdMomentum::SgdMomentum(std::vector<Tensor> params, float learning_rate, float momentum)
    : params_(std::move(params)), learning_rate_(learning_rate), momentum_(momentum) {
  if (!(learning_rate > 0.0f)) throw std::invalid_argument("sgd: learning rate must be positive");
  if (!(momentum >= 0.0f && momentum < 1.0f)) throw std::invalid_argument("sgd: momentum must lie in [0, 1)");
  velocity_.reserve(params_.size());
  for (const Tensor& p : params_) velocity_.emplace_back(static_cast<size_t>(p.numel()), 0.0f);
}

void SgdMomentum::step() { sgd_momentum_step(params_, velocity_, learning_rate_, momentum_); }

void SgdMomentum::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

}  // namespace irsn
