// Copyright 2026 The hflic Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "hflic/tensor.hpp"

namespace hflic {

namespace detail {

struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Called with this node once its grad is complete; pushes grad into inputs.
  std::function<void(Node&)> backward;

  Tensor& grad_buffer() {
    if (grad.empty()) grad = Tensor(value.shape());
    return grad;
  }
};

}  // namespace detail

// Handle to a value in the dynamic computation graph. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  static Var parameter(Tensor value) { return Var(std::move(value), true); }
  static Var constant(Tensor value) { return Var(std::move(value), false); }

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  // Direct mutation is only meant for optimizers and weight loading.
  Tensor& mutable_value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  void set_requires_grad(bool on) const { node_->requires_grad = on; }

  // Empty tensor when nothing has been accumulated.
  const Tensor& grad() const { return node_->grad; }
  void zero_grad() const { node_->grad = Tensor(); }

  double item() const;

  detail::Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<detail::Node>& shared() const noexcept { return node_; }

 private:
  explicit Var(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend Var make_result(Tensor value, const std::vector<Var>& inputs,
                         std::function<void(detail::Node&)> backward);
};

// Graph construction is enabled per thread; inference runs under NoGradGuard.
bool grad_enabled() noexcept;

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Builds an op node. The backward function is dropped when no input needs a
// gradient or when grad mode is off.
Var make_result(Tensor value, const std::vector<Var>& inputs,
                std::function<void(detail::Node&)> backward);

// Adds `g` into the gradient of `input` if it tracks gradients.
void accumulate(detail::Node& input, const Tensor& g);

// Reverse-mode sweep from a scalar root (seed 1).
void backward(const Var& root);

}  // namespace hflic
