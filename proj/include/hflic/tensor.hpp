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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hflic {

// Every tensor in the library is rank 4 (batch, channel, height, width).
// Scalars are 1x1x1x1; conv weights are (out, in, kh, kw).
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  constexpr std::size_t numel() const noexcept {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  constexpr std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }
  friend constexpr bool operator==(const Shape&, const Shape&) = default;
  std::string str() const;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor(Shape{}, v); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t numel() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::size_t index(int n, int c, int h, int w) const noexcept {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  double& at(int n, int c, int h, int w) noexcept { return data_[index(n, c, h, w)]; }
  double at(int n, int c, int h, int w) const noexcept { return data_[index(n, c, h, w)]; }

  double* plane(int n, int c) noexcept { return data_.data() + index(n, c, 0, 0); }
  const double* plane(int n, int c) const noexcept { return data_.data() + index(n, c, 0, 0); }

  void fill(double v);
  Tensor reshaped(Shape s) const;

  // Channel range [begin, begin + count) of every batch item.
  Tensor channels(int begin, int count) const;
  // Batch item `n` as a 1xCxHxW tensor.
  Tensor item(int n) const;

  double sum() const;
  double max_abs() const;
  bool all_finite() const;

 private:
  Shape shape_{0, 0, 0, 0};
  std::vector<double> data_;
};

Tensor concat_channels(std::span<const Tensor> parts);
Tensor concat_batch(std::span<const Tensor> parts);

// Replicate-pad on the bottom/right edge to (h, w).
Tensor pad_replicate(const Tensor& x, int h, int w);
Tensor crop(const Tensor& x, int h, int w);
Tensor clamp(const Tensor& x, double lo, double hi);

}  // namespace hflic
