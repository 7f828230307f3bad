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

#include "hflic/optimizer.hpp"

#include <cmath>

#include "hflic/errors.hpp"

namespace hflic {

Adam::Adam(ParameterList params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  for (const auto& p : params_) {
    m_.emplace_back(p.var.shape());
    v_.emplace_back(p.var.shape());
  }
}

void Adam::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const Tensor& g = params_[k].var.grad();
    auto w = params_[k].var.mutable_value().values();
    auto m = m_[k].values();
    auto v = v_[k].values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g.empty() ? 0.0 : g.values()[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.eps);
    }
  }
}

void Adam::save(TensorArchive& a, const std::string& prefix) const {
  a.add(prefix + "t", Tensor(Shape{1, 1, 1, 1}, {static_cast<double>(t_)}));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    a.add(prefix + "m/" + params_[k].name, m_[k]);
    a.add(prefix + "v/" + params_[k].name, v_[k]);
  }
}

void Adam::load(const TensorArchive& a, const std::string& prefix) {
  t_ = static_cast<long>(a.get(prefix + "t", Shape{1, 1, 1, 1}).values()[0]);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    m_[k] = a.get(prefix + "m/" + params_[k].name, params_[k].var.shape());
    v_[k] = a.get(prefix + "v/" + params_[k].name, params_[k].var.shape());
  }
}

double grad_norm(const ParameterList& params) {
  double total = 0.0;
  for (const auto& p : params) {
    for (double g : p.var.grad().values()) total += g * g;
  }
  return std::sqrt(total);
}

double clip_grad_norm(const ParameterList& params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (const auto& p : params) {
      if (p.var.grad().empty()) continue;
      // grad() is const; scale through the node's buffer.
      for (double& g : p.var.node()->grad.values()) g *= scale;
    }
  }
  return norm;
}

}  // namespace hflic
