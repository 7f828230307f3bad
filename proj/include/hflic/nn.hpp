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
#include <string_view>
#include <vector>

#include "hflic/autograd.hpp"
#include "hflic/ops.hpp"
#include "hflic/rng.hpp"

namespace hflic {

struct NamedParameter {
  std::string name;
  Var var;
};
using ParameterList = std::vector<NamedParameter>;

std::size_t parameter_count(const ParameterList& params);

enum class Activation { kGelu, kRelu };

Activation activation_from_string(std::string_view name);
std::string_view to_string(Activation a);
Var activate(const Var& x, Activation a);

// Weights use PyTorch's default init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad, Rng& rng,
         bool with_bias = true);

  Var forward(const Var& x) const;
  void collect(const std::string& prefix, ParameterList& out) const;
  void zero_init();

  int in_channels() const { return weight.shape().c; }
  int out_channels() const { return weight.shape().n; }

  Var weight;
  Var bias;
  int stride = 1;
  int pad = 0;
};

class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride, int pad,
                  int output_pad, Rng& rng);

  Var forward(const Var& x) const;
  void collect(const std::string& prefix, ParameterList& out) const;
  void zero_init();

  Var weight;
  Var bias;
  int stride = 1;
  int pad = 0;
  int output_pad = 0;
};

void zero_grads(const ParameterList& params);

}  // namespace hflic
