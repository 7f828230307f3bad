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

#include "hflic/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hflic {

Tensor synthetic_image(int h, int w, Rng& rng) {
  Tensor img(Shape{1, 3, h, w});
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (int c = 0; c < 3; ++c) {
    const double base = rng.uniform(0.2, 0.8);
    struct Wave {
      double fx, fy, phase, amp;
    };
    Wave waves[3];
    for (Wave& wv : waves) wv = {rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0), rng.uniform(0, kTwoPi), rng.uniform(0.05, 0.15)};
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        double v = base;
        for (const Wave& wv : waves) v += wv.amp * std::sin(kTwoPi * (wv.fx * j / w + wv.fy * i / h) + wv.phase);
        img.at(0, c, i, j) = v;
      }
  }
  const int shapes = 3 + static_cast<int>(rng.below(4));
  for (int s = 0; s < shapes; ++s) {
    const bool ellipse = rng.uniform() < 0.5;
    const double cy = rng.uniform(0, h), cx = rng.uniform(0, w);
    const double ry = rng.uniform(0.05, 0.3) * h, rx = rng.uniform(0.05, 0.3) * w;
    const double colour[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const double dy = (i - cy) / ry, dx = (j - cx) / rx;
        const bool inside = ellipse ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (inside) {
          for (int c = 0; c < 3; ++c) img.at(0, c, i, j) = colour[c];
        }
      }
  }
  for (double& v : img.values()) v = std::clamp(v + rng.uniform(-0.02, 0.02), 0.0, 1.0);
  return img;
}

}  // namespace hflic
