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

#include <span>
#include <vector>

#include "hflic/autograd.hpp"

namespace hflic {

// Elementwise arithmetic. Binary ops broadcast any size-1 dimension.
Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator*(const Var& a, double s);
Var operator*(double s, const Var& a);
Var operator+(const Var& a, double s);
Var operator-(const Var& a);

Var square(const Var& x);
Var sqrt(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);
Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var gelu(const Var& x);
Var softplus(const Var& x);
Var sigmoid(const Var& x);
Var tanh(const Var& x);

Var sum(const Var& x);
Var mean(const Var& x);
// (n, c, h, w) -> (n, 1, h, w)
Var sum_channels(const Var& x);

Var concat_channels(std::span<const Var> parts);
Var slice_channels(const Var& x, int begin, int count);
Var detach(const Var& x);

// Forward value is `forward`, gradient flows to `x` unchanged (straight-through).
Var straight_through(const Var& x, Tensor forward);

// Weight (out, in, k, k), bias (out, 1, 1, 1) or undefined.
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad);
// Weight (in, out, k, k). Output size (h - 1) * stride - 2 * pad + k + output_pad.
Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad,
                     int output_pad);

// Non-overlapping k x k average pooling; h and w must be divisible by k.
Var avg_pool(const Var& x, int k);
Var max_pool2(const Var& x);
Var upsample_nearest(const Var& x, int factor);
// Top-left h x w window.
Var crop(const Var& x, int h, int w);

// Gram matrices of non-overlapping patch x patch windows, normalized by c*patch*patch.
// (n, c, h, w) -> (n, windows, c, c); windows in row-major window order.
Var patch_gram(const Var& features, int patch);

// Per-symbol code length -log2(P) of a unit-bin discretized Gaussian, with P
// floored at 2^-16. Shapes of y, mu, sigma must match.
Var gaussian_bits(const Var& y, const Var& mu, const Var& sigma);

}  // namespace hflic
