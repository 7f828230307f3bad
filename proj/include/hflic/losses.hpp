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

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hflic/masks.hpp"
#include "hflic/nn.hpp"

namespace hflic {

// mean(sqrt((x - x_hat)^2 + eps^2)).
Var charbonnier(const Var& x, const Var& x_hat, double eps = 1e-3);
// sum(m * sqrt(d^2 + eps^2)) / max(C * sum(m), 1); mask is (n,1,h,w).
Var charbonnier(const Var& x, const Var& x_hat, const Tensor& mask, double eps = 1e-3);
// sum(m * (x - x_hat)^2) / max(C * sum(m), 1).
Var masked_mse(const Var& x, const Var& x_hat, const Tensor& mask);

// Frozen multi-level feature network. Tap l has spatial size (h, w) / 2^tap_levels()[l].
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::vector<Var> features(const Var& x) const = 0;
  virtual std::vector<int> tap_levels() const = 0;
  virtual std::string name() const = 0;
};

struct RandomExtractorConfig {
  std::vector<int> channels{8, 16, 32, 32, 32};
  std::uint64_t seed = 0x5EED;
};

// Seeded random conv pyramid: stage s = (avgpool 2 if s > 0), conv3x3, GELU.
class RandomConvExtractor : public FeatureExtractor {
 public:
  explicit RandomConvExtractor(const RandomExtractorConfig& cfg = {});
  std::vector<Var> features(const Var& x) const override;
  std::vector<int> tap_levels() const override;
  std::string name() const override { return "random"; }

 private:
  std::vector<Conv2d> stages_;
};

// VGG-style network (3x3 convs, ReLU, 2x2 max pools) read from an archive
// whose metadata is {"kind":"vgg","layers":[64,64,"M",...],"taps":[1,3,...]};
// taps index conv layers whose ReLU output is returned.
class VggExtractor : public FeatureExtractor {
 public:
  static VggExtractor load(const std::filesystem::path& path);
  std::vector<Var> features(const Var& x) const override;
  std::vector<int> tap_levels() const override { return tap_levels_; }
  std::string name() const override { return "vgg"; }

 private:
  struct Stage {
    bool pool = false;
    Conv2d conv;
    bool tap = false;
  };
  std::vector<Stage> stages_;
  std::vector<int> tap_levels_;
};

// "random", or "vgg16" which loads $HFLIC_CACHE/vgg16.hfar.
std::unique_ptr<FeatureExtractor> make_extractor(const std::string& kind);

// Per-location unit-normalized squared feature differences, averaged over
// locations (weighted by `masks[level]` when given) and summed over taps.
Var feature_distance(const std::vector<Var>& fa, const std::vector<Var>& fb,
                     const std::vector<int>& levels, const std::vector<Tensor>* masks = nullptr);
Var feature_perceptual(const Var& x, const Var& x_hat, const FeatureExtractor& fx,
                       const std::vector<Tensor>* mask_pyramid = nullptr);

// Per-window Gram distance ||G(a) - G(b)||_F^2, mean over windows (weighted
// by the window's mean mask value), summed over taps. Windows are
// min(patch, h, w) wide; feature maps are cropped to a multiple of that.
Var style_distance(const std::vector<Var>& fa, const std::vector<Var>& fb,
                   const std::vector<int>& levels, int patch,
                   const std::vector<Tensor>* masks = nullptr);
Var style_loss(const Var& x, const Var& x_hat, const FeatureExtractor& fx, int patch = 16,
               const std::vector<Tensor>* mask_pyramid = nullptr);

// Conditional PatchGAN: the latent is projected to 12 channels, nearest
// upsampled x16 and concatenated with the image, then four 4x4 stride-2
// convs and a 1x1 head give one logit per 16x16 patch.
class Discriminator {
 public:
  Discriminator(int latent_channels, Rng& rng);
  Var forward(const Var& image, const Var& y_hat) const;
  void collect(const std::string& prefix, ParameterList& out) const;
  ParameterList parameters() const;

 private:
  int latent_channels_;
  Conv2d project_;
  std::vector<Conv2d> body_;
  Conv2d head_;
};

Var hinge_d(const Var& real_logits, const Var& fake_logits);
Var hinge_g(const Var& fake_logits);
// -sum(w * fake) / max(sum(w), eps); w is (n,1,h,w) like the logits.
Var hinge_g(const Var& fake_logits, const Tensor& weight);

struct LossWeights {
  double w_rec = 1.0;
  double w_lpips = 1.0;
  double w_adv = 0.01;
  double w_sty = 40.0;
  double w_face = 10.0;
  double lambda_rate = 0.1;

  void validate() const;
};

struct LossBreakdown {
  double rec = 0, lpips = 0, adv = 0, sty = 0, face = 0, rate = 0, total = 0;
};

struct LossInputs {
  Var x;
  Var x_hat;
  Var bits;                             // scalar code length of the batch
  const RegionMasks* masks = nullptr;   // null: whole image is perceptual
  Var fake_logits;                      // undefined: no adversarial term
  int style_patch = 16;
  double charbonnier_eps = 1e-3;
};

struct LossResult {
  Var total;
  LossBreakdown weighted;  // each term times its weight; rate = lambda * bpp
  LossBreakdown raw;       // unweighted terms; rate = bpp
};

// total = M_perc-weighted [w_rec*rec + w_lpips*lpips + w_adv*adv + w_sty*sty]
//         + w_face*masked_mse(M_face) + lambda_rate*bpp.
// Feature terms with zero weight are not evaluated (raw value 0).
LossResult total_loss(const LossInputs& in, const LossWeights& w, const FeatureExtractor* fx);

}  // namespace hflic
