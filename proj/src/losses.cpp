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

#include "hflic/losses.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>

#include "hflic/archive.hpp"
#include "hflic/errors.hpp"

namespace hflic {

using nlohmann::json;

namespace {

void check_same(const Var& a, const Var& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ConfigError(std::string(what) + ": shape " + a.shape().str() + " vs " + b.shape().str());
  }
}

void check_mask(const Var& x, const Tensor& m, const char* what) {
  const Shape s = x.shape();
  const Shape ms = m.shape();
  if (ms.n != s.n || ms.c != 1 || ms.h != s.h || ms.w != s.w) {
    throw ConfigError(std::string(what) + ": mask " + ms.str() + " does not fit " + s.str());
  }
}

Var masked_mean(const Var& values, const Tensor& mask, double channels) {
  const double denom = std::max(channels * mask.sum(), 1.0);
  return sum(values * Var::constant(mask)) * (1.0 / denom);
}

const Tensor& mask_at(const std::vector<Tensor>& masks, int level) {
  if (level >= static_cast<int>(masks.size())) {
    throw ConfigError("mask pyramid has " + std::to_string(masks.size()) + " levels, need level " +
                      std::to_string(level));
  }
  return masks[level];
}

Var unit_normalize(const Var& f) { return f / sqrt(sum_channels(square(f)) + 1e-10); }

}  // namespace

Var charbonnier(const Var& x, const Var& x_hat, double eps) {
  check_same(x, x_hat, "charbonnier");
  return mean(sqrt(square(x - x_hat) + eps * eps));
}

Var charbonnier(const Var& x, const Var& x_hat, const Tensor& mask, double eps) {
  check_same(x, x_hat, "charbonnier");
  check_mask(x, mask, "charbonnier");
  return masked_mean(sqrt(square(x - x_hat) + eps * eps), mask, x.shape().c);
}

Var masked_mse(const Var& x, const Var& x_hat, const Tensor& mask) {
  check_same(x, x_hat, "masked_mse");
  check_mask(x, mask, "masked_mse");
  return masked_mean(square(x - x_hat), mask, x.shape().c);
}

// ---- feature extractors ------------------------------------------------------

RandomConvExtractor::RandomConvExtractor(const RandomExtractorConfig& cfg) {
  if (cfg.channels.empty()) throw ConfigError("extractor: no stages");
  Rng rng(cfg.seed);
  int in = 3;
  for (int c : cfg.channels) {
    if (c < 1) throw ConfigError("extractor: stage width must be >= 1");
    Conv2d conv(in, c, 3, 1, 1, rng);
    conv.weight = Var::constant(rng.normal_tensor(conv.weight.shape(), 0.0, std::sqrt(2.0 / (9.0 * in))));
    conv.bias = Var::constant(rng.normal_tensor(conv.bias.shape(), 0.0, 0.1));
    stages_.push_back(std::move(conv));
    in = c;
  }
}

std::vector<Var> RandomConvExtractor::features(const Var& x) const {
  std::vector<Var> out;
  Var h = x * 2.0 + (-1.0);
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    if (s > 0) h = avg_pool(h, 2);
    h = gelu(stages_[s].forward(h));
    out.push_back(h);
  }
  return out;
}

std::vector<int> RandomConvExtractor::tap_levels() const {
  std::vector<int> levels;
  for (std::size_t s = 0; s < stages_.size(); ++s) levels.push_back(static_cast<int>(s));
  return levels;
}

VggExtractor VggExtractor::load(const std::filesystem::path& path) {
  const TensorArchive a = TensorArchive::load(path);
  json meta;
  try {
    meta = json::parse(a.metadata);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": bad metadata: " + e.what());
  }
  if (meta.value("kind", "") != "vgg" || !meta.contains("layers") || !meta.contains("taps")) {
    throw ParseError(path.string() + ": not a vgg weight archive");
  }
  std::vector<int> taps = meta["taps"].get<std::vector<int>>();
  VggExtractor v;
  int in = 3, conv_index = 0, level = 0;
  bool pending_pool = false;
  for (const json& layer : meta["layers"]) {
    if (layer.is_string()) {
      if (layer.get<std::string>() != "M") throw ParseError(path.string() + ": bad layer entry");
      pending_pool = true;
      ++level;
      continue;
    }
    const int out = layer.get<int>();
    Stage st;
    st.pool = pending_pool;
    pending_pool = false;
    const std::string p = "conv" + std::to_string(conv_index);
    st.conv.weight = Var::constant(a.get(p + ".weight", Shape{out, in, 3, 3}));
    st.conv.bias = Var::constant(a.get(p + ".bias", Shape{out, 1, 1, 1}));
    st.conv.stride = 1;
    st.conv.pad = 1;
    st.tap = std::find(taps.begin(), taps.end(), conv_index) != taps.end();
    if (st.tap) v.tap_levels_.push_back(level);
    v.stages_.push_back(std::move(st));
    in = out;
    ++conv_index;
  }
  if (v.tap_levels_.size() != taps.size()) throw ParseError(path.string() + ": tap out of range");
  return v;
}

std::vector<Var> VggExtractor::features(const Var& x) const {
  static const Tensor kScale(Shape{1, 3, 1, 1}, {1 / 0.229, 1 / 0.224, 1 / 0.225});
  static const Tensor kShift(Shape{1, 3, 1, 1}, {-0.485 / 0.229, -0.456 / 0.224, -0.406 / 0.225});
  Var h = x * Var::constant(kScale) + Var::constant(kShift);
  std::vector<Var> out;
  for (const Stage& st : stages_) {
    if (st.pool) h = max_pool2(h);
    h = relu(st.conv.forward(h));
    if (st.tap) out.push_back(h);
  }
  return out;
}

std::unique_ptr<FeatureExtractor> make_extractor(const std::string& kind) {
  if (kind == "random") return std::make_unique<RandomConvExtractor>();
  if (kind == "vgg16") {
    const char* cache = std::getenv("HFLIC_CACHE");
    if (!cache || !*cache) throw ConfigError("vgg16 extractor needs HFLIC_CACHE to be set");
    return std::make_unique<VggExtractor>(VggExtractor::load(std::filesystem::path(cache) / "vgg16.hfar"));
  }
  throw ConfigError("unknown feature extractor '" + kind + "'");
}

// ---- feature losses ------------------------------------------------------------

Var feature_distance(const std::vector<Var>& fa, const std::vector<Var>& fb,
                     const std::vector<int>& levels, const std::vector<Tensor>* masks) {
  if (fa.size() != fb.size() || fa.size() != levels.size() || fa.empty()) {
    throw ConfigError("feature_distance: tap count mismatch");
  }
  Var total;
  for (std::size_t l = 0; l < fa.size(); ++l) {
    check_same(fa[l], fb[l], "feature_distance");
    const Var d = sum_channels(square(unit_normalize(fa[l]) - unit_normalize(fb[l])));
    Var term;
    if (masks) {
      const Tensor& m = mask_at(*masks, levels[l]);
      check_mask(d, m, "feature_distance");
      term = sum(d * Var::constant(m)) * (1.0 / std::max(m.sum(), 1e-12));
    } else {
      term = mean(d);
    }
    total = total.defined() ? total + term : term;
  }
  return total;
}

Var feature_perceptual(const Var& x, const Var& x_hat, const FeatureExtractor& fx,
                       const std::vector<Tensor>* mask_pyramid) {
  check_same(x, x_hat, "feature_perceptual");
  return feature_distance(fx.features(x), fx.features(x_hat), fx.tap_levels(), mask_pyramid);
}

Var style_distance(const std::vector<Var>& fa, const std::vector<Var>& fb,
                   const std::vector<int>& levels, int patch, const std::vector<Tensor>* masks) {
  if (fa.size() != fb.size() || fa.size() != levels.size() || fa.empty()) {
    throw ConfigError("style_distance: tap count mismatch");
  }
  if (patch < 1) throw ConfigError("style_distance: patch must be >= 1");
  Var total;
  for (std::size_t l = 0; l < fa.size(); ++l) {
    check_same(fa[l], fb[l], "style_distance");
    const Shape s = fa[l].shape();
    const int p = std::min({patch, s.h, s.w});
    const int h = s.h / p * p, w = s.w / p * p;
    const Var ga = patch_gram(crop(fa[l], h, w), p);
    const Var gb = patch_gram(crop(fb[l], h, w), p);
    const Var d = square(ga - gb);  // (n, windows, c, c)
    const int windows = (h / p) * (w / p);
    Var term;
    if (masks) {
      const Tensor& m = mask_at(*masks, levels[l]);
      if (m.shape().n != s.n || m.shape().h != s.h || m.shape().w != s.w) {
        throw ConfigError("style_distance: mask does not fit " + s.str());
      }
      const Tensor wm = avg_pool(Var::constant(crop(m, h, w)), p).value().reshaped(Shape{s.n, windows, 1, 1});
      term = sum(d * Var::constant(wm)) * (1.0 / std::max(wm.sum(), 1e-12));
    } else {
      term = sum(d) * (1.0 / (static_cast<double>(s.n) * windows));
    }
    total = total.defined() ? total + term : term;
  }
  return total;
}

Var style_loss(const Var& x, const Var& x_hat, const FeatureExtractor& fx, int patch,
               const std::vector<Tensor>* mask_pyramid) {
  check_same(x, x_hat, "style_loss");
  return style_distance(fx.features(x), fx.features(x_hat), fx.tap_levels(), patch, mask_pyramid);
}

// ---- adversarial -------------------------------------------------------------

Discriminator::Discriminator(int latent_channels, Rng& rng)
    : latent_channels_(latent_channels), project_(latent_channels, 12, 1, 1, 0, rng) {
  int in = 3 + 12;
  for (int c : {16, 32, 64, 64}) {
    body_.emplace_back(in, c, 4, 2, 1, rng);
    in = c;
  }
  head_ = Conv2d(in, 1, 1, 1, 0, rng);
}

Var Discriminator::forward(const Var& image, const Var& y_hat) const {
  const Shape xs = image.shape(), ys = y_hat.shape();
  if (xs.c != 3 || ys.c != latent_channels_ || ys.n != xs.n || ys.h * 16 != xs.h || ys.w * 16 != xs.w) {
    throw ConfigError("discriminator: image " + xs.str() + " and latent " + ys.str() + " do not match");
  }
  const Var cond = upsample_nearest(leaky_relu(project_.forward(y_hat), 0.2), 16);
  Var h = concat_channels(std::vector<Var>{image, cond});
  for (const Conv2d& c : body_) h = leaky_relu(c.forward(h), 0.2);
  return head_.forward(h);
}

void Discriminator::collect(const std::string& prefix, ParameterList& out) const {
  project_.collect(prefix + "project", out);
  for (std::size_t i = 0; i < body_.size(); ++i) body_[i].collect(prefix + "body." + std::to_string(i), out);
  head_.collect(prefix + "head", out);
}

ParameterList Discriminator::parameters() const {
  ParameterList out;
  collect("disc.", out);
  return out;
}

Var hinge_d(const Var& real_logits, const Var& fake_logits) {
  return mean(relu(-real_logits + 1.0)) + mean(relu(fake_logits + 1.0));
}

Var hinge_g(const Var& fake_logits) { return -mean(fake_logits); }

Var hinge_g(const Var& fake_logits, const Tensor& weight) {
  check_mask(fake_logits, weight, "hinge_g");
  return -(sum(fake_logits * Var::constant(weight)) * (1.0 / std::max(weight.sum(), 1e-12)));
}

// ---- composition ---------------------------------------------------------------

void LossWeights::validate() const {
  for (double v : {w_rec, w_lpips, w_adv, w_sty, w_face, lambda_rate}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("loss weights must be finite and >= 0");
  }
}

LossResult total_loss(const LossInputs& in, const LossWeights& w, const FeatureExtractor* fx) {
  w.validate();
  check_same(in.x, in.x_hat, "total_loss");
  const Shape s = in.x.shape();
  RegionMasks whole;
  const RegionMasks* masks = in.masks;
  if (!masks) {
    std::vector<RegionMasks> per_image(s.n, rasterize({}, s.h, s.w, 0, 5));
    whole = stack_masks(per_image);
    masks = &whole;
  }
  LossResult r;
  Var total;
  auto add = [&](double weight, const Var& term, double& raw, double& weighted) {
    raw = term.item();
    weighted = weight * raw;
    const Var t = term * weight;
    total = total.defined() ? total + t : t;
  };
  add(w.w_rec, charbonnier(in.x, in.x_hat, masks->perc, in.charbonnier_eps), r.raw.rec, r.weighted.rec);
  if (w.w_lpips > 0.0 || w.w_sty > 0.0) {
    if (!fx) throw ConfigError("total_loss: feature terms need an extractor");
    const auto fa = fx->features(in.x);
    const auto fb = fx->features(in.x_hat);
    const auto levels = fx->tap_levels();
    if (w.w_lpips > 0.0) {
      add(w.w_lpips, feature_distance(fa, fb, levels, &masks->perc_pyramid), r.raw.lpips, r.weighted.lpips);
    }
    if (w.w_sty > 0.0) {
      add(w.w_sty, style_distance(fa, fb, levels, in.style_patch, &masks->perc_pyramid), r.raw.sty,
          r.weighted.sty);
    }
  }
  if (in.fake_logits.defined() && w.w_adv > 0.0) {
    const Shape ls = in.fake_logits.shape();
    const Tensor* weight = nullptr;
    for (const Tensor& level : masks->perc_pyramid) {
      if (level.shape().h == ls.h && level.shape().w == ls.w) weight = &level;
    }
    if (!weight) throw ConfigError("total_loss: no mask level matches the logits " + ls.str());
    add(w.w_adv, hinge_g(in.fake_logits, *weight), r.raw.adv, r.weighted.adv);
  }
  add(w.w_face, masked_mse(in.x, in.x_hat, masks->face), r.raw.face, r.weighted.face);
  if (in.bits.defined()) {
    const Var bpp = in.bits * (1.0 / (static_cast<double>(s.n) * s.h * s.w));
    add(w.lambda_rate, bpp, r.raw.rate, r.weighted.rate);
  }
  r.total = total;
  r.raw.total = r.weighted.total = total.item();
  return r;
}

}  // namespace hflic
