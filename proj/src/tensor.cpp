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

#include "hflic/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hflic/errors.hpp"

namespace hflic {

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape), data_(shape.numel(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(shape), data_(std::move(values)) {
  if (data_.size() != shape_.numel()) {
    throw ConfigError("tensor value count " + std::to_string(data_.size()) +
                      " does not match shape " + shape_.str());
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(Shape s) const {
  if (s.numel() != numel()) throw ConfigError("reshape " + shape_.str() + " -> " + s.str());
  return Tensor(s, data_);
}

Tensor Tensor::channels(int begin, int count) const {
  if (begin < 0 || count < 0 || begin + count > shape_.c) {
    throw ConfigError("channel slice out of range for " + shape_.str());
  }
  Tensor out(Shape{shape_.n, count, shape_.h, shape_.w});
  const std::size_t plane = shape_.plane();
  for (int n = 0; n < shape_.n; ++n) {
    std::copy_n(this->plane(n, begin), plane * count, out.plane(n, 0));
  }
  return out;
}

Tensor Tensor::item(int n) const {
  Tensor out(Shape{1, shape_.c, shape_.h, shape_.w});
  std::copy_n(plane(n, 0), out.numel(), out.data());
  return out;
}

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) throw ConfigError("concat of zero tensors");
  Shape s = parts[0].shape();
  int total = 0;
  for (const auto& p : parts) {
    if (p.shape().n != s.n || p.shape().h != s.h || p.shape().w != s.w) {
      throw ConfigError("concat shape mismatch " + p.shape().str() + " vs " + s.str());
    }
    total += p.shape().c;
  }
  s.c = total;
  Tensor out(s);
  for (int n = 0; n < s.n; ++n) {
    int c0 = 0;
    for (const auto& p : parts) {
      std::copy_n(p.plane(n, 0), p.shape().c * p.shape().plane(), out.plane(n, c0));
      c0 += p.shape().c;
    }
  }
  return out;
}

Tensor concat_batch(std::span<const Tensor> parts) {
  if (parts.empty()) throw ConfigError("concat of zero tensors");
  Shape s = parts[0].shape();
  s.n = 0;
  for (const auto& p : parts) {
    if (p.shape().c != s.c || p.shape().h != s.h || p.shape().w != s.w) {
      throw ConfigError("batch concat shape mismatch");
    }
    s.n += p.shape().n;
  }
  Tensor out(s);
  double* dst = out.data();
  for (const auto& p : parts) dst = std::copy_n(p.data(), p.numel(), dst);
  return out;
}

Tensor pad_replicate(const Tensor& x, int h, int w) {
  const Shape& s = x.shape();
  if (h < s.h || w < s.w) throw ConfigError("pad target smaller than input");
  Tensor out(Shape{s.n, s.c, h, w});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
          out.at(n, c, i, j) = x.at(n, c, std::min(i, s.h - 1), std::min(j, s.w - 1));
  return out;
}

Tensor crop(const Tensor& x, int h, int w) {
  const Shape& s = x.shape();
  if (h > s.h || w > s.w) throw ConfigError("crop target larger than input");
  Tensor out(Shape{s.n, s.c, h, w});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int i = 0; i < h; ++i) std::copy_n(x.plane(n, c) + i * s.w, w, out.plane(n, c) + i * w);
  return out;
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  Tensor out = x;
  for (double& v : out.values()) v = std::clamp(v, lo, hi);
  return out;
}

}  // namespace hflic
