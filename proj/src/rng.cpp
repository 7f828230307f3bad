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

#include "hflic/rng.hpp"

#include <cmath>
#include <numbers>

namespace hflic {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

Tensor Rng::uniform_tensor(Shape shape, double lo, double hi) {
  Tensor t(shape);
  for (double& v : t.values()) v = uniform(lo, hi);
  return t;
}

Tensor Rng::normal_tensor(Shape shape, double mean, double stddev) {
  Tensor t(shape);
  for (double& v : t.values()) v = mean + stddev * normal();
  return t;
}

}  // namespace hflic
