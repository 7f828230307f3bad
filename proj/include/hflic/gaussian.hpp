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

#include <cmath>

namespace hflic {

inline constexpr double kProbabilityFloor = 1.0 / 65536.0;  // 2^-16
inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double std_normal_cdf(double t) { return 0.5 * std::erfc(-t * kInvSqrt2); }
inline double std_normal_pdf(double t) { return kInvSqrt2Pi * std::exp(-0.5 * t * t); }

// Mass of the unit bin centred at offset v from the mean. Evaluated on the
// lower tail through |v| so that +v and -v give bitwise identical results.
inline double gaussian_bin_probability(double v, double sigma) {
  const double a = std::abs(v);
  return std_normal_cdf((0.5 - a) / sigma) - std_normal_cdf((-0.5 - a) / sigma);
}

// Mass of (-inf, bound] for a bound below the mean, same lower-tail form.
inline double gaussian_lower_tail(double bound_minus_mean, double sigma) {
  return std_normal_cdf(bound_minus_mean / sigma);
}

inline double floored_bits(double p) {
  return -std::log2(p < kProbabilityFloor ? kProbabilityFloor : p);
}

}  // namespace hflic
