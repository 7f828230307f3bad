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

#include <gtest/gtest.h>

#include <cmath>

#include "hflic/entropy_model.hpp"
#include "hflic/errors.hpp"
#include "hflic/gaussian.hpp"
#include "test_util.hpp"

namespace hflic {
namespace {

using testing::central_difference;
using testing::relative_error;

Tensor scalar(double v) { return Tensor(Shape{1, 1, 1, 1}, {v}); }

TEST(Quantize, RoundExamples) {
  EXPECT_EQ(quantize_round(scalar(2.4), scalar(0.0)).values()[0], 2.0);
  EXPECT_DOUBLE_EQ(quantize_round(scalar(2.4), scalar(0.6)).values()[0], 2.6);
  EXPECT_EQ(quantize(Var::constant(scalar(2.4)), Var::constant(scalar(0.0)), QuantMode::kRound).item(), 2.0);
}

TEST(Quantize, NoiseStaysWithinHalf) {
  Rng rng(1);
  const Tensor y = rng.normal_tensor(Shape{1, 1, 100, 1000}, 0, 5);
  const Tensor q = quantize(Var::constant(y), Var(), QuantMode::kAdditiveNoise, &rng).value();
  double max_dev = 0.0;
  for (std::size_t i = 0; i < y.numel(); ++i) max_dev = std::max(max_dev, std::abs(q.values()[i] - y.values()[i]));
  EXPECT_LE(max_dev, 0.5);
  EXPECT_GT(max_dev, 0.49);
}

TEST(Quantize, SteRoundsForwardAndPassesGradient) {
  const Var y = Var::parameter(Tensor(Shape{1, 1, 1, 3}, {0.4, 1.6, -2.5}));
  const Var mu = Var::constant(Tensor(Shape{1, 1, 1, 3}));
  const Var q = quantize(y, mu, QuantMode::kSteRound);
  EXPECT_EQ(q.value().values()[0], 0.0);
  EXPECT_EQ(q.value().values()[1], 2.0);
  EXPECT_EQ(q.value().values()[2], -3.0);
  backward(sum(q * 2.0));
  for (double g : y.grad().values()) EXPECT_EQ(g, 2.0);
}

TEST(Partition, Defaults) {
  EXPECT_EQ(GroupPartition::default_for(48).sizes(), (std::vector<int>{4, 4, 8, 12, 20}));
  EXPECT_EQ(GroupPartition::default_for(320).sizes(), (std::vector<int>{16, 16, 32, 64, 192}));
  EXPECT_EQ(GroupPartition::ten_groups_for(48).count(), 10);
  EXPECT_EQ(GroupPartition::ten_groups_for(48).total(), 48);
  EXPECT_THROW(partition_channels(48, {10, 10}), ConfigError);
  EXPECT_THROW(partition_channels(4, {4, 0}), ConfigError);
  const GroupPartition p = partition_channels(48, {4, 4, 8, 12, 20});
  EXPECT_EQ(p.offset(4), 28);
}

TEST(Checkerboard, MasksPartitionEveryGrid) {
  for (int h = 1; h <= 64; ++h) {
    for (int w = 1; w <= 64; w += (h % 7) + 1) {
      const Tensor a = checkerboard_mask(h, w, CheckerboardPhase::kAnchor);
      const Tensor n = checkerboard_mask(h, w, CheckerboardPhase::kNonAnchor);
      for (std::size_t i = 0; i < a.numel(); ++i) {
        ASSERT_EQ(a.values()[i] + n.values()[i], 1.0);
        ASSERT_EQ(a.values()[i] * n.values()[i], 0.0);
      }
      EXPECT_EQ(a.values()[0], 1.0);
    }
  }
}

TEST(Rate, SingleSymbolMatchesOracle) {
  // -log2(erf(0.5 / sqrt 2))
  EXPECT_NEAR(estimate_rate(scalar(0), scalar(0), scalar(1)), 1.38486653429098968, 1e-12);
  EXPECT_NEAR(estimate_rate(scalar(1.3), scalar(0.2), scalar(0.7)), 2.43793605974989759, 1e-11);
  EXPECT_NEAR(estimate_rate(scalar(0), scalar(0), scalar(0.11)), 7.90841805450185e-06, 1e-13);
  // True cost is 44.83 bits; the 2^-16 probability floor caps it.
  EXPECT_DOUBLE_EQ(estimate_rate(scalar(-3), scalar(0.5), scalar(0.4)), 16.0);
}

double brute_force_bits(double y, double mu, double sigma) {
  const double hi = 0.5 * std::erfc(-((y - mu + 0.5) / sigma) / std::sqrt(2.0));
  const double lo = 0.5 * std::erfc(-((y - mu - 0.5) / sigma) / std::sqrt(2.0));
  return -std::log2(std::max(hi - lo, std::ldexp(1.0, -16)));
}

TEST(Rate, MatchesScalarBruteForce) {
  Rng rng(2);
  const Shape s{1, 4, 5, 5};
  const Tensor mu = rng.normal_tensor(s, 0, 1);
  const Tensor sigma = rng.uniform_tensor(s, 0.3, 4.0);
  Tensor y(s);
  for (std::size_t i = 0; i < y.numel(); ++i) y.values()[i] = std::round(rng.normal(0, 3));
  double expected = 0.0;
  for (std::size_t i = 0; i < y.numel(); ++i) {
    expected += brute_force_bits(y.values()[i], mu.values()[i], sigma.values()[i]);
  }
  EXPECT_LT(relative_error(estimate_rate(y, mu, sigma), expected), 1e-9);
}

TEST(Rate, MonotoneInSigmaAtMode) {
  double prev = 0.0;
  for (double s = 0.11; s < 100.0; s *= 2.0) {
    const double bits = estimate_rate(scalar(0.3), scalar(0.3), scalar(s));
    EXPECT_GT(bits, prev);
    prev = bits;
  }
}

TEST(Rate, GradientMatchesFiniteDifference) {
  Rng rng(3);
  const Shape s{1, 1, 2, 3};
  Tensor y = rng.normal_tensor(s, 0, 2), mu = rng.normal_tensor(s, 0, 1), sg = rng.uniform_tensor(s, 0.3, 3);
  const Var yv = Var::parameter(y), mv = Var::parameter(mu), sv = Var::parameter(sg);
  backward(sum(gaussian_bits(yv, mv, sv)));
  auto f = [&] { return estimate_rate(y, mu, sg); };
  for (std::size_t i = 0; i < y.numel(); ++i) {
    EXPECT_LT(relative_error(yv.grad().values()[i], central_difference(y, i, f)), 1e-6);
    EXPECT_LT(relative_error(mv.grad().values()[i], central_difference(mu, i, f)), 1e-6);
    EXPECT_LT(relative_error(sv.grad().values()[i], central_difference(sg, i, f)), 1e-6);
  }
}

class ContextTest : public ::testing::Test {
 protected:
  static constexpr int kM = 48, kH = 8, kW = 8;
  Rng rng{7};
  GroupPartition part = GroupPartition::default_for(kM);
  ContextModel ctx{kM, 2 * kM, part, EntropyConfig{}, rng};
  Var hyper = Var::constant(rng.normal_tensor(Shape{1, 2 * kM, kH, kW}, 0, 1));

  Tensor params_of(const Tensor& y_hat, int g, CheckerboardPhase phase) {
    const GaussianParams p = ctx.params(hyper, Var::constant(y_hat), g, phase);
    return concat_channels(std::vector<Tensor>{p.mu.value(), p.sigma.value()});
  }

  // True if (c, i, j) comes at or after (g, phase) in coding order.
  bool is_future(int c, int i, int j, int g, CheckerboardPhase phase) const {
    const int off = part.offset(g);
    if (c >= off + part.size(g)) return true;
    if (c < off) return false;
    return phase == CheckerboardPhase::kAnchor || !is_anchor(i, j);
  }
};

TEST_F(ContextTest, InvariantToLaterSymbols) {
  for (int g = 0; g < part.count(); ++g) {
    for (auto phase : {CheckerboardPhase::kAnchor, CheckerboardPhase::kNonAnchor}) {
      const Tensor base = rng.normal_tensor(Shape{1, kM, kH, kW}, 0, 3);
      const Tensor ref = params_of(base, g, phase);
      for (int trial = 0; trial < 20; ++trial) {
        Tensor y = base;
        for (int c = 0; c < kM; ++c)
          for (int i = 0; i < kH; ++i)
            for (int j = 0; j < kW; ++j)
              if (is_future(c, i, j, g, phase)) y.at(0, c, i, j) = rng.normal(0, 50);
        const Tensor got = params_of(y, g, phase);
        for (std::size_t k = 0; k < ref.numel(); ++k) ASSERT_EQ(got.values()[k], ref.values()[k]);
      }
    }
  }
}

double abs_diff(const Tensor& a, const Tensor& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.numel(); ++k) d += std::abs(a.values()[k] - b.values()[k]);
  return d;
}

TEST_F(ContextTest, DependsOnPastSymbols) {
  const Tensor base = rng.normal_tensor(Shape{1, kM, kH, kW}, 0, 3);
  Tensor y = base;
  y.at(0, 0, 2, 2) += 5.0;  // anchor of group 0
  EXPECT_GT(abs_diff(params_of(y, 0, CheckerboardPhase::kNonAnchor),
                     params_of(base, 0, CheckerboardPhase::kNonAnchor)), 0.0);
  EXPECT_GT(abs_diff(params_of(y, 1, CheckerboardPhase::kAnchor),
                     params_of(base, 1, CheckerboardPhase::kAnchor)), 0.0);
}

TEST_F(ContextTest, SigmaFloor) {
  for (int g = 0; g < part.count(); ++g) {
    const Tensor y = rng.normal_tensor(Shape{1, kM, kH, kW}, 0, 100);
    const GaussianParams p = ctx.params(Var::constant(rng.normal_tensor(Shape{1, 2 * kM, kH, kW}, 0, 100)),
                                        Var::constant(y), g, CheckerboardPhase::kNonAnchor);
    for (double s : p.sigma.value().values()) ASSERT_GE(s, 0.11);
    EXPECT_EQ(p.mu.shape(), (Shape{1, part.size(g), kH, kW}));
  }
}

TEST(FactorizedPrior, CdfMonotoneAndBitsFinite) {
  Rng rng(9);
  FactorizedPrior prior(8, 3, rng);
  for (int k = 0; k < 1000; ++k) {
    const int c = static_cast<int>(rng.below(8));
    const double t = rng.uniform(-20, 20);
    ASSERT_GE(prior.cdf(c, t + 1), prior.cdf(c, t));
  }
  Tensor z(Shape{2, 8, 4, 4});
  for (double& v : z.values()) v = std::round(rng.uniform(-8, 8));
  const double bits = factorized_rate(prior, z);
  EXPECT_TRUE(std::isfinite(bits));
  EXPECT_GT(bits, 0.0);
  const auto probs = prior.bin_probabilities(3, 16);
  ASSERT_EQ(probs.size(), 35u);
  double total = 0.0;
  for (double p : probs) total += p;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(FactorizedPrior, TrainingConcentratesOnData) {
  Rng rng(10);
  FactorizedPrior prior(4, 3, rng);
  ParameterList params;
  prior.collect("prior", params);
  Tensor z(Shape{1, 4, 8, 8});
  for (int c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < z.shape().plane(); ++i) z.plane(0, c)[i] = std::round(rng.normal(c - 1.5, 0.7));
  const double before = factorized_rate(prior, z);
  for (int step = 0; step < 200; ++step) {
    zero_grads(params);
    backward(sum(prior.bits(Var::constant(z))));
    for (const auto& p : params) {
      auto v = p.var.mutable_value().values();
      const auto g = p.var.grad().values();
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= 0.01 * g[i];
    }
  }
  const double after = factorized_rate(prior, z);
  EXPECT_LT(after, 0.8 * before);
}

TEST(FactorizedPrior, BitsGradientMatchesFiniteDifference) {
  Rng rng(12);
  FactorizedPrior prior(2, 3, rng);
  ParameterList params;
  prior.collect("prior", params);
  Tensor z(Shape{1, 2, 2, 2}, {0, 1, -2, 3, 0, 0, 1, -1});
  backward(sum(prior.bits(Var::constant(z))));
  for (const auto& p : params) {
    Tensor& v = p.var.mutable_value();
    for (std::size_t i = 0; i < v.numel(); ++i) {
      const double fd = central_difference(v, i, [&] { return factorized_rate(prior, z); });
      EXPECT_LT(relative_error(p.var.grad().values()[i], fd), 1e-5) << p.name << i;
    }
  }
}

}  // namespace
}  // namespace hflic
