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

#include <string>

#include "hflic/archive.hpp"
#include "hflic/nn.hpp"

namespace hflic {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Parameters without an accumulated gradient
// are treated as having zero gradient.
class Adam {
 public:
  Adam(ParameterList params, AdamConfig cfg = {});

  void step(double lr);
  const ParameterList& parameters() const { return params_; }
  long steps() const { return t_; }

  // Moments are stored as "<prefix>m/<name>" and "<prefix>v/<name>".
  void save(TensorArchive& a, const std::string& prefix) const;
  void load(const TensorArchive& a, const std::string& prefix);

 private:
  ParameterList params_;
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  long t_ = 0;
};

// Global L2 norm of all gradients.
double grad_norm(const ParameterList& params);
// Scales gradients so their global norm is at most `max_norm`; returns the
// norm before clipping.
double clip_grad_norm(const ParameterList& params, double max_norm);

}  // namespace hflic
