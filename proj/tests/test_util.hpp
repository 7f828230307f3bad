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

#include <algorithm>
#include <cmath>
#include <functional>

#include "hflic/autograd.hpp"
#include "hflic/rng.hpp"

namespace hflic::testing {

inline double relative_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-12});
  return std::abs(a - b) / scale;
}

// Central difference of f at element `i` of `x` (x is restored afterwards).
inline double central_difference(Tensor& x, std::size_t i, const std::function<double()>& f,
                                 double h = 1e-6) {
  const double saved = x.values()[i];
  x.values()[i] = saved + h;
  const double up = f();
  x.values()[i] = saved - h;
  const double down = f();
  x.values()[i] = saved;
  return (up - down) / (2.0 * h);
}

inline Tensor random_image(Rng& rng, int h, int w, int n = 1) {
  return rng.uniform_tensor(Shape{n, 3, h, w}, 0.0, 1.0);
}

}  // namespace hflic::testing

namespace hflic::testing {

// max_i |a_i - b_i| / max_i |b_i|: relative error of a gradient in the max norm.
inline double gradient_error(const Tensor& analytic, const Tensor& numeric) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < numeric.numel(); ++i) {
    diff = std::max(diff, std::abs(analytic.values()[i] - numeric.values()[i]));
    scale = std::max(scale, std::abs(numeric.values()[i]));
  }
  return diff / std::max(scale, 1e-300);
}

// Autodiff gradient of f at x (as a parameter) against central differences.
inline double check_gradient(Tensor x, const std::function<Var(const Var&)>& f, double h = 1e-6) {
  const Var xv = Var::parameter(x);
  backward(f(xv));
  const Tensor analytic = xv.grad();
  Tensor numeric(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    numeric.values()[i] = central_difference(x, i, [&] {
      NoGradGuard g;
      return f(Var::constant(x)).item();
    }, h);
  }
  return gradient_error(analytic, numeric);
}

}  // namespace hflic::testing
