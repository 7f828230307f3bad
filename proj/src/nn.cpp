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

#include "hflic/nn.hpp"

#include <cmath>

#include "hflic/errors.hpp"

namespace hflic {

std::size_t parameter_count(const ParameterList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.var.value().numel();
  return n;
}

Activation activation_from_string(std::string_view name) {
  if (name == "gelu") return Activation::kGelu;
  if (name == "relu") return Activation::kRelu;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) { return a == Activation::kGelu ? "gelu" : "relu"; }

Var activate(const Var& x, Activation a) {
  return a == Activation::kGelu ? gelu(x) : relu(x);
}

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride_, int pad_, Rng& rng,
               bool with_bias)
    : stride(stride_), pad(pad_) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1) throw ConfigError("bad conv geometry");
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_channels * kernel * kernel));
  weight = Var::parameter(rng.uniform_tensor(Shape{out_channels, in_channels, kernel, kernel},
                                             -bound, bound));
  if (with_bias) bias = Var::parameter(rng.uniform_tensor(Shape{out_channels, 1, 1, 1}, -bound, bound));
}

Var Conv2d::forward(const Var& x) const { return conv2d(x, weight, bias, stride, pad); }

void Conv2d::collect(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".weight", weight});
  if (bias.defined()) out.push_back({prefix + ".bias", bias});
}

void Conv2d::zero_init() {
  weight.mutable_value().fill(0.0);
  if (bias.defined()) bias.mutable_value().fill(0.0);
}

ConvTranspose2d::ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride_,
                                 int pad_, int output_pad_, Rng& rng)
    : stride(stride_), pad(pad_), output_pad(output_pad_) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(out_channels * kernel * kernel));
  weight = Var::parameter(
      rng.uniform_tensor(Shape{in_channels, out_channels, kernel, kernel}, -bound, bound));
  bias = Var::parameter(rng.uniform_tensor(Shape{out_channels, 1, 1, 1}, -bound, bound));
}

Var ConvTranspose2d::forward(const Var& x) const {
  return conv_transpose2d(x, weight, bias, stride, pad, output_pad);
}

void ConvTranspose2d::collect(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

void ConvTranspose2d::zero_init() {
  weight.mutable_value().fill(0.0);
  bias.mutable_value().fill(0.0);
}

void zero_grads(const ParameterList& params) {
  for (const auto& p : params) p.var.zero_grad();
}

}  // namespace hflic
