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

#include "hflic/autograd.hpp"

#include <unordered_set>

#include "hflic/errors.hpp"

namespace hflic {

namespace {
thread_local bool t_grad_enabled = true;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<detail::Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

double Var::item() const {
  if (value().numel() != 1) throw ConfigError("item() on non-scalar " + shape().str());
  return value()[0];
}

bool grad_enabled() noexcept { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

Var make_result(Tensor value, const std::vector<Var>& inputs,
                std::function<void(detail::Node&)> backward) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  if (t_grad_enabled) {
    for (const auto& in : inputs) {
      if (in.requires_grad()) {
        node->requires_grad = true;
        break;
      }
    }
  }
  if (node->requires_grad) {
    node->inputs.reserve(inputs.size());
    for (const auto& in : inputs) node->inputs.push_back(in.shared());
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

void accumulate(detail::Node& input, const Tensor& g) {
  if (!input.requires_grad) return;
  Tensor& buf = input.grad_buffer();
  double* dst = buf.data();
  const double* src = g.data();
  for (std::size_t i = 0, n = buf.numel(); i < n; ++i) dst[i] += src[i];
}

void backward(const Var& root) {
  if (!root.defined()) throw ConfigError("backward on undefined var");
  if (root.value().numel() != 1) throw ConfigError("backward root must be scalar");
  if (!root.requires_grad()) return;

  // Iterative post-order DFS for a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
  // Interior grads are no longer needed; keep only leaves.
  for (detail::Node* node : order) {
    if (node->backward) node->grad = Tensor();
  }
}

}  // namespace hflic
