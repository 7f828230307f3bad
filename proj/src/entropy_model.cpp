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

#include "hflic/entropy_model.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <numeric>

#include "hflic/errors.hpp"
#include "hflic/gaussian.hpp"

namespace hflic {

// ---- partition -----------------------------------------------------------------

GroupPartition::GroupPartition(int m, std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.empty()) throw ConfigError("group partition: no groups");
  for (int s : sizes_) {
    if (s < 1) throw ConfigError("group partition: group sizes must be >= 1");
    offsets_.push_back(total_);
    total_ += s;
  }
  if (total_ != m) {
    throw ConfigError("group partition: sizes sum to " + std::to_string(total_) +
                      ", expected M=" + std::to_string(m));
  }
}

GroupPartition GroupPartition::default_for(int m) {
  if (m == 320) return GroupPartition(m, {16, 16, 32, 64, 192});
  if (m % 12 == 0) {
    const int u = m / 12;
    return GroupPartition(m, {u, u, 2 * u, 3 * u, 5 * u});
  }
  throw ConfigError("no default group partition for M=" + std::to_string(m) +
                    "; give explicit sizes");
}

GroupPartition GroupPartition::ten_groups_for(int m) {
  if (m == 48) return GroupPartition(m, {2, 2, 2, 4, 4, 4, 6, 6, 8, 10});
  if (m % 48 == 0) {
    const int u = m / 48;
    return GroupPartition(m, {2 * u, 2 * u, 2 * u, 4 * u, 4 * u, 4 * u, 6 * u, 6 * u, 8 * u,
                              10 * u});
  }
  throw ConfigError("no ten-group partition for M=" + std::to_string(m));
}

GroupPartition partition_channels(int m, const std::vector<int>& sizes) {
  return GroupPartition(m, sizes);
}

Tensor checkerboard_mask(int h, int w, CheckerboardPhase phase) {
  Tensor mask(Shape{1, 1, h, w});
  const bool want_anchor = phase == CheckerboardPhase::kAnchor;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) mask.at(0, 0, i, j) = is_anchor(i, j) == want_anchor ? 1.0 : 0.0;
  return mask;
}

// ---- quantization --------------------------------------------------------------

Tensor quantize_round(const Tensor& y, const Tensor& mu) {
  if (!(y.shape() == mu.shape())) throw ConfigError("quantize: shape mismatch");
  Tensor out(y.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = mu[i] + std::round(y[i] - mu[i]);
  return out;
}

Var quantize(const Var& y, const Var& mu, QuantMode mode, Rng* rng) {
  switch (mode) {
    case QuantMode::kAdditiveNoise: {
      if (rng == nullptr) throw ConfigError("quantize: noise mode needs a generator");
      return y + Var::constant(rng->uniform_tensor(y.shape(), -0.5, 0.5));
    }
    case QuantMode::kSteRound:
      return straight_through(y, quantize_round(y.value(), mu.value()));
    case QuantMode::kRound:
      return Var::constant(quantize_round(y.value(), mu.value()));
  }
  throw ConfigError("quantize: unknown mode");
}

// ---- context model -------------------------------------------------------------

ContextModel::ContextModel(int m_channels, int hyper_channels, GroupPartition partition,
                           const EntropyConfig& cfg, Rng& rng)
    : m_channels_(m_channels),
      hyper_channels_(hyper_channels),
      partition_(std::move(partition)),
      sigma_min_(cfg.sigma_min) {
  if (partition_.total() != m_channels) throw ConfigError("context model: partition != M");
  if (cfg.sigma_min <= 0.0) throw ConfigError("context model: sigma_min must be > 0");
  const int hidden = cfg.context_hidden;
  for (int g = 0; g < partition_.count(); ++g) {
    const int prev = partition_.offset(g);
    const int sz = partition_.size(g);
    anchor_.push_back(AnchorNet{Conv2d(hyper_channels + prev, hidden, 1, 1, 0, rng),
                                Conv2d(hidden, 2 * sz, 1, 1, 0, rng)});
    NonAnchorNet net{Conv2d(sz, 2 * sz, 5, 1, 2, rng), Tensor(Shape{1, 1, 5, 5}),
                     Conv2d(hyper_channels + prev + 2 * sz, hidden, 1, 1, 0, rng),
                     Conv2d(hidden, 2 * sz, 1, 1, 0, rng)};
    // A non-anchor at (i, j) has i + j odd; taps at odd offsets reach anchors.
    for (int ki = 0; ki < 5; ++ki)
      for (int kj = 0; kj < 5; ++kj) net.spatial_mask.at(0, 0, ki, kj) = (ki + kj) % 2 == 1;
    non_anchor_.push_back(std::move(net));
  }
}

GaussianParams ContextModel::split(const Var& raw, int size) const {
  return {slice_channels(raw, 0, size), softplus(slice_channels(raw, size, size)) + sigma_min_};
}

GaussianParams ContextModel::params(const Var& hyper, const Var& y_hat, int group,
                                    CheckerboardPhase phase) const {
  if (group < 0 || group >= partition_.count()) throw ConfigError("context: bad group index");
  if (hyper.shape().c != hyper_channels_) throw ConfigError("context: hyper width mismatch");
  if (y_hat.shape().c != m_channels_ || y_hat.shape().h != hyper.shape().h ||
      y_hat.shape().w != hyper.shape().w || y_hat.shape().n != hyper.shape().n) {
    throw ConfigError("context: latent " + y_hat.shape().str() + " not aligned with hyper " +
                      hyper.shape().str());
  }
  const int off = partition_.offset(group);
  const int sz = partition_.size(group);
  std::vector<Var> parts{hyper};
  if (off > 0) parts.push_back(slice_channels(y_hat, 0, off));
  if (phase == CheckerboardPhase::kAnchor) {
    const AnchorNet& net = anchor_[group];
    Var h = activate(net.in.forward(concat_channels(parts)), act_);
    return split(net.out.forward(h), sz);
  }
  const NonAnchorNet& net = non_anchor_[group];
  const Shape& s = y_hat.shape();
  Var anchors = slice_channels(y_hat, off, sz) *
                Var::constant(checkerboard_mask(s.h, s.w, CheckerboardPhase::kAnchor));
  Var weight = net.spatial.weight * Var::constant(net.spatial_mask);
  parts.push_back(conv2d(anchors, weight, net.spatial.bias, 1, 2));
  Var h = activate(net.in.forward(concat_channels(parts)), act_);
  return split(net.out.forward(h), sz);
}

void ContextModel::collect(const std::string& prefix, ParameterList& out) const {
  for (int g = 0; g < partition_.count(); ++g) {
    const std::string p = prefix + "." + std::to_string(g);
    anchor_[g].in.collect(p + ".anchor.in", out);
    anchor_[g].out.collect(p + ".anchor.out", out);
    non_anchor_[g].spatial.collect(p + ".non_anchor.spatial", out);
    non_anchor_[g].in.collect(p + ".non_anchor.in", out);
    non_anchor_[g].out.collect(p + ".non_anchor.out", out);
  }
}

Var estimate_rate_map(const Var& y_hat, const GaussianParams& params) {
  return gaussian_bits(y_hat, params.mu, params.sigma);
}

double estimate_rate(const Tensor& y_hat, const Tensor& mu, const Tensor& sigma) {
  if (!(y_hat.shape() == mu.shape()) || !(y_hat.shape() == sigma.shape())) {
    throw ConfigError("estimate_rate: shape mismatch");
  }
  double bits = 0.0;
  for (std::size_t i = 0; i < y_hat.numel(); ++i) {
    bits += floored_bits(gaussian_bin_probability(y_hat[i] - mu[i], sigma[i]));
  }
  return bits;
}

// ---- factorized prior ----------------------------------------------------------

namespace {

constexpr double kScaleFloor = 1e-3;

double sigmoid_d(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double softplus_d(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

// Mixture parameters of one channel, unpacked.
struct Mixture {
  std::vector<double> weight, mean, scale, raw;
};

Mixture unpack(const Tensor& logits, const Tensor& means, const Tensor& raw, int c, int k) {
  Mixture m;
  m.weight.resize(k);
  double mx = -1e300;
  for (int i = 0; i < k; ++i) mx = std::max(mx, logits.at(c, i, 0, 0));
  double z = 0.0;
  for (int i = 0; i < k; ++i) z += (m.weight[i] = std::exp(logits.at(c, i, 0, 0) - mx));
  for (double& w : m.weight) w /= z;
  for (int i = 0; i < k; ++i) {
    m.mean.push_back(means.at(c, i, 0, 0));
    m.raw.push_back(raw.at(c, i, 0, 0));
    m.scale.push_back(softplus_d(m.raw.back()) + kScaleFloor);
  }
  return m;
}

// Mass of [lo, hi] under one logistic, evaluated on the tail nearest to the
// interval for accuracy.
double logistic_mass(double lo, double hi, double mean, double scale) {
  const double a = (hi - mean) / scale;
  const double b = (lo - mean) / scale;
  if (b > 0.0) return sigmoid_d(-b) - sigmoid_d(-a);
  return sigmoid_d(a) - sigmoid_d(b);
}

}  // namespace

FactorizedPrior::FactorizedPrior(int channels, int components, Rng& rng)
    : channels_(channels), components_(components) {
  if (channels < 1 || components < 1) throw ConfigError("factorized prior: bad size");
  Tensor logits(Shape{channels, components, 1, 1});
  Tensor means(Shape{channels, components, 1, 1});
  Tensor raw(Shape{channels, components, 1, 1});
  for (int c = 0; c < channels; ++c)
    for (int k = 0; k < components; ++k) {
      const double spread = components == 1 ? 0.0 : -1.0 + 2.0 * k / (components - 1);
      logits.at(c, k, 0, 0) = 0.0;
      means.at(c, k, 0, 0) = 2.0 * spread + rng.uniform(-0.1, 0.1);
      raw.at(c, k, 0, 0) = 0.5413 + rng.uniform(-0.1, 0.1);  // softplus ~= 1
    }
  logits_ = Var::parameter(std::move(logits));
  means_ = Var::parameter(std::move(means));
  raw_scales_ = Var::parameter(std::move(raw));
}

double FactorizedPrior::cdf(int channel, double t) const {
  const Mixture m = unpack(logits_.value(), means_.value(), raw_scales_.value(), channel,
                           components_);
  double acc = 0.0;
  for (int k = 0; k < components_; ++k) acc += m.weight[k] * sigmoid_d((t - m.mean[k]) / m.scale[k]);
  return acc;
}

std::vector<double> FactorizedPrior::bin_probabilities(int channel, int support) const {
  const Mixture m = unpack(logits_.value(), means_.value(), raw_scales_.value(), channel,
                           components_);
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> probs;
  probs.reserve(2 * support + 3);
  auto mass = [&](double lo, double hi) {
    double acc = 0.0;
    for (int k = 0; k < components_; ++k) {
      acc += m.weight[k] * logistic_mass(lo, hi, m.mean[k], m.scale[k]);
    }
    return acc;
  };
  probs.push_back(mass(-inf, -support - 0.5));
  for (int s = -support; s <= support; ++s) probs.push_back(mass(s - 0.5, s + 0.5));
  probs.push_back(mass(support + 0.5, inf));
  return probs;
}

Var FactorizedPrior::bits(const Var& z) const {
  const Shape s = z.shape();
  if (s.c != channels_) throw ConfigError("factorized prior: channel mismatch");
  const int k = components_;
  std::vector<Mixture> mix;
  for (int c = 0; c < channels_; ++c) {
    mix.push_back(unpack(logits_.value(), means_.value(), raw_scales_.value(), c, k));
  }
  Tensor out(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (std::size_t i = 0; i < s.plane(); ++i) {
        const double t = z.value().plane(n, c)[i];
        double p = 0.0;
        for (int j = 0; j < k; ++j) {
          p += mix[c].weight[j] * logistic_mass(t - 0.5, t + 0.5, mix[c].mean[j], mix[c].scale[j]);
        }
        out.plane(n, c)[i] = floored_bits(p);
      }
  return make_result(std::move(out), {z, logits_, means_, raw_scales_},
                     [mix = std::move(mix), k](detail::Node& self) {
    detail::Node& nz = *self.inputs[0];
    detail::Node& nl = *self.inputs[1];
    detail::Node& nm = *self.inputs[2];
    detail::Node& nr = *self.inputs[3];
    Tensor* gz = nz.requires_grad ? &nz.grad_buffer() : nullptr;
    Tensor* gl = nl.requires_grad ? &nl.grad_buffer() : nullptr;
    Tensor* gm = nm.requires_grad ? &nm.grad_buffer() : nullptr;
    Tensor* gr = nr.requires_grad ? &nr.grad_buffer() : nullptr;
    constexpr double inv_ln2 = 1.4426950408889634074;
    const Shape& s = nz.value.shape();
    std::vector<double> d(k), da(k), ds(k);
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c)
        for (std::size_t i = 0; i < s.plane(); ++i) {
          const Mixture& m = mix[c];
          const double t = nz.value.plane(n, c)[i];
          double p = 0.0;
          double dp_dt = 0.0;
          for (int j = 0; j < k; ++j) {
            const double a = (t + 0.5 - m.mean[j]) / m.scale[j];
            const double b = (t - 0.5 - m.mean[j]) / m.scale[j];
            const double sa = sigmoid_d(a), sb = sigmoid_d(b);
            const double pa = sa * (1.0 - sa), pb = sb * (1.0 - sb);
            d[j] = logistic_mass(t - 0.5, t + 0.5, m.mean[j], m.scale[j]);
            da[j] = (pa - pb) / m.scale[j];             // d mass / d t
            ds[j] = -(a * pa - b * pb) / m.scale[j];    // d mass / d scale
            p += m.weight[j] * d[j];
            dp_dt += m.weight[j] * da[j];
          }
          if (p < kProbabilityFloor) continue;
          const double g = -self.grad.plane(n, c)[i] * inv_ln2 / p;
          if (gz) gz->plane(n, c)[i] += g * dp_dt;
          for (int j = 0; j < k; ++j) {
            if (gl) gl->at(c, j, 0, 0) += g * m.weight[j] * (d[j] - p);
            if (gm) gm->at(c, j, 0, 0) -= g * m.weight[j] * da[j];
            if (gr) gr->at(c, j, 0, 0) += g * m.weight[j] * ds[j] * sigmoid_d(m.raw[j]);
          }
        }
  });
}

void FactorizedPrior::collect(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".logits", logits_});
  out.push_back({prefix + ".means", means_});
  out.push_back({prefix + ".raw_scales", raw_scales_});
}

double factorized_rate(const FactorizedPrior& prior, const Tensor& z_hat) {
  NoGradGuard guard;
  return prior.bits(Var::constant(z_hat)).value().sum();
}

}  // namespace hflic
