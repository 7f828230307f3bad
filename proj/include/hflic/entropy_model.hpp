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

#include <vector>

#include "hflic/nn.hpp"

namespace hflic {

// Ordered channel groups; index order is the coding order.
class GroupPartition {
 public:
  GroupPartition() = default;
  // Throws ConfigError unless every size >= 1 and the sizes sum to `m`.
  GroupPartition(int m, std::vector<int> sizes);

  // (4,4,8,12,20) for M=48 and (16,16,32,64,192) for M=320; other widths
  // divisible by 12 scale the 1:1:2:3:5 pattern.
  static GroupPartition default_for(int m);
  // Ten-group partition used by the decode-time comparison, M=48 only.
  static GroupPartition ten_groups_for(int m);

  int count() const { return static_cast<int>(sizes_.size()); }
  int size(int g) const { return sizes_[g]; }
  int offset(int g) const { return offsets_[g]; }
  int total() const { return total_; }
  const std::vector<int>& sizes() const { return sizes_; }

 private:
  std::vector<int> sizes_;
  std::vector<int> offsets_;
  int total_ = 0;
};

GroupPartition partition_channels(int m, const std::vector<int>& sizes);

enum class CheckerboardPhase { kAnchor, kNonAnchor };

inline bool is_anchor(int i, int j) { return (i + j) % 2 == 0; }
// (1, 1, h, w) indicator of the phase's positions.
Tensor checkerboard_mask(int h, int w, CheckerboardPhase phase);

enum class QuantMode { kAdditiveNoise, kSteRound, kRound };

// round: mu + round(y - mu), ties away from zero.
// noise: y + U(-0.5, 0.5) (rng required).
// ste_round: rounds forward, identity gradient to y.
Var quantize(const Var& y, const Var& mu, QuantMode mode, Rng* rng = nullptr);
Tensor quantize_round(const Tensor& y, const Tensor& mu);

struct GaussianParams {
  Var mu;
  Var sigma;
};

struct EntropyConfig {
  std::vector<int> groups;  // empty -> GroupPartition::default_for(M)
  double sigma_min = 0.11;
  int context_hidden = 64;
  int mixture_components = 3;
};

// Parameter networks for every (group, phase). Group g reads the hyper
// features, the fully decoded groups 0..g-1 and, in the non-anchor phase,
// the anchors of group g through a checkerboard-masked 5x5 conv.
class ContextModel {
 public:
  ContextModel(int m_channels, int hyper_channels, GroupPartition partition,
               const EntropyConfig& cfg, Rng& rng);

  // `y_hat` carries all M channels; anything not yet decoded in coding order
  // is masked out here, so callers may pass arbitrary values there.
  GaussianParams params(const Var& hyper, const Var& y_hat, int group,
                        CheckerboardPhase phase) const;

  const GroupPartition& partition() const { return partition_; }
  double sigma_min() const { return sigma_min_; }
  void collect(const std::string& prefix, ParameterList& out) const;

 private:
  struct AnchorNet {
    Conv2d in, out;
  };
  struct NonAnchorNet {
    Conv2d spatial;
    Tensor spatial_mask;  // (1, 1, 5, 5) taps that land on anchors
    Conv2d in, out;
  };

  GaussianParams split(const Var& raw, int size) const;

  int m_channels_;
  int hyper_channels_;
  GroupPartition partition_;
  double sigma_min_;
  Activation act_ = Activation::kGelu;
  std::vector<AnchorNet> anchor_;
  std::vector<NonAnchorNet> non_anchor_;
};

// Per-symbol bits; elementwise (see gaussian_bits).
Var estimate_rate_map(const Var& y_hat, const GaussianParams& params);
// Total bits sum(-log2 P) with P floored at 2^-16.
double estimate_rate(const Tensor& y_hat, const Tensor& mu, const Tensor& sigma);

// Learned per-channel CDF for the hyper-latent: a mixture of logistics,
// monotone by construction.
class FactorizedPrior {
 public:
  FactorizedPrior(int channels, int components, Rng& rng);

  // Elementwise bits for z (n, C, h, w) under the unit-bin discretization.
  Var bits(const Var& z) const;
  double cdf(int channel, double t) const;
  // Probabilities for symbols [-support, support] with two tail bins at the
  // ends: [low tail, -L, ..., L, high tail].
  std::vector<double> bin_probabilities(int channel, int support) const;

  int channels() const { return channels_; }
  void collect(const std::string& prefix, ParameterList& out) const;

 private:
  int channels_;
  int components_;
  Var logits_;      // (C, K, 1, 1)
  Var means_;       // (C, K, 1, 1)
  Var raw_scales_;  // (C, K, 1, 1), scale = softplus(raw) + 1e-3
};

double factorized_rate(const FactorizedPrior& prior, const Tensor& z_hat);

}  // namespace hflic
