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

#include <vector>

#include "irsn/tensor.hpp"

namespace irsn {

/// SGD with heavy-ball momentum: v <- mu * v + g; w <- w - lr * v.
/// One zero-initialized velocity buffer per registered parameter.
class SgdMomentum {
 public:
  SgdMomentum(std::vector<Tensor> params, float learning_rate, float momentum);

  void step();
  void zero_grad();

  float learning_rate() const { return learning_rate_; }
  float momentum() const { return momentum_; }
  const std::vector<std::vector<float>>& velocity() const { return velocity_; }

 private:
  std::vector<Tensor> params_;
  float learning_rate_;
  float momentum_;
  std::vector<std::vector<float>> velocity_;
};

/// Stateless form of one update, for callers that hold their own buffers.
void sgd_momentum_step(std::vector<Tensor>& params, std::vector<std::vector<float>>& velocity, float learning_rate,
                       float momentum);

}  // namespace irsn
