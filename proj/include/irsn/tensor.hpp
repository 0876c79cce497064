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
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace irsn {

using Shape = std::vector<int64_t>;

std::string shape_str(const Shape& shape);
int64_t shape_numel(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TensorImpl;

// Backward rule of a recorded op. Receives the output node (whose grad is
// populated) and accumulates into the grads of its inputs.
struct GradFn {
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  std::function<void(TensorImpl& out)> backward;
  const char* name = "";
};

struct TensorImpl {
  Shape shape;
  std::vector<float> data;
  std::vector<float> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::shared_ptr<GradFn> grad_fn;

  float* grad_buffer();  // allocates zeroed grad on demand
};

/// Dense row-major f32 array with reverse-mode differentiation.
///
/// A Tensor is a cheap handle; copies share storage. Ops that see at least
/// one requires_grad input record a GradFn on their output unless a
/// NoGradGuard is live on the calling thread.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor ones(Shape shape, bool requires_grad = false) { return full(std::move(shape), 1.0f, requires_grad); }
  static Tensor from_data(Shape shape, std::vector<float> data, bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  int64_t dim(int axis) const;
  int rank() const { return static_cast<int>(shape().size()); }
  int64_t numel() const;

  std::span<float> data();
  std::span<const float> data() const;
  float item() const;
  float at(std::initializer_list<int64_t> index) const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool has_grad() const;
  std::span<float> grad();
  std::span<const float> grad() const;
  void zero_grad();

  // Independent copy of the values with no graph history.
  Tensor clone() const;
  // Shares storage, drops history; result never requires grad.
  Tensor detach() const;

  /// Runs reverse accumulation from this scalar. Every requires_grad
  /// ancestor receives its gradient; the recorded graph is released after.
  void backward();

  TensorImpl* impl() const { return impl_.get(); }
  const std::shared_ptr<TensorImpl>& impl_ptr() const { return impl_; }
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<TensorImpl> impl_;
};

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

namespace detail {
// Creates an output tensor and wires up its GradFn when any input needs it.
Tensor make_result(Shape shape, std::vector<float> data, std::initializer_list<Tensor> inputs,
                   std::function<void(TensorImpl&)> backward, const char* name);
Tensor make_result(Shape shape, std::vector<float> data, const std::vector<Tensor>& inputs,
                   std::function<void(TensorImpl&)> backward, const char* name);
void check_finite(std::span<const float> values, const char* op);
}  // namespace detail

}  // namespace irsn
