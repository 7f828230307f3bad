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

#include "hflic/transforms.hpp"

#include "hflic/errors.hpp"

namespace hflic {

namespace {

template <class T>
class Wrapped : public Layer {
 public:
  explicit Wrapped(T inner) : inner_(std::move(inner)) {}
  Var forward(const Var& x) const override { return inner_.forward(x); }
  void collect(const std::string& prefix, ParameterList& out) const override {
    inner_.collect(prefix, out);
  }
  T& inner() { return inner_; }

 private:
  T inner_;
};

class ActivationLayer : public Layer {
 public:
  explicit ActivationLayer(Activation a) : act_(a) {}
  Var forward(const Var& x) const override { return activate(x, act_); }
  void collect(const std::string&, ParameterList&) const override {}

 private:
  Activation act_;
};

template <class T>
std::unique_ptr<Layer> wrap(T layer) {
  return std::make_unique<Wrapped<T>>(std::move(layer));
}

void add_blocks(Sequential& net, const TransformConfig& cfg, Rng& rng) {
  for (int i = 0; i < cfg.blocks_per_stage; ++i) {
    net.add(std::make_unique<InvertedBottleneck>(cfg.n_channels, cfg.expansion_ratio,
                                                 cfg.activation, rng));
  }
}

void require_channels(const Var& x, int c, const char* who) {
  if (x.shape().c != c) {
    throw ConfigError(std::string(who) + ": expected " + std::to_string(c) +
                      " channels, got " + x.shape().str());
  }
}

}  // namespace

void TransformConfig::validate() const {
  if (n_channels < 8) throw ConfigError("transform: N must be >= 8");
  if (m_channels < 8) throw ConfigError("transform: M must be >= 8");
  if (z_channels < 1) throw ConfigError("transform: hyper width must be >= 1");
  if (expansion_ratio < 1) throw ConfigError("transform: expansion ratio must be >= 1");
  if (blocks_per_stage < 1) throw ConfigError("transform: blocks_per_stage must be >= 1");
}

Var Sequential::forward(const Var& x) const {
  Var h = x;
  for (const auto& layer : layers_) h = layer->forward(h);
  return h;
}

void Sequential::collect(const std::string& prefix, ParameterList& out) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->collect(prefix + "." + std::to_string(i), out);
  }
}

InvertedBottleneck::InvertedBottleneck(int channels, int ratio, Activation act, Rng& rng)
    : channels_(channels),
      ratio_(ratio),
      act_(act),
      expand_(channels, channels * ratio, 1, 1, 0, rng),
      mid_(channels * ratio, channels * ratio, 3, 1, 1, rng),
      project_(channels * ratio, channels, 1, 1, 0, rng) {
  if (ratio < 1) throw ConfigError("inverted bottleneck: expansion ratio must be >= 1");
}

Var InvertedBottleneck::hidden(const Var& x) const {
  require_channels(x, channels_, "inverted bottleneck");
  return activate(mid_.forward(activate(expand_.forward(x), act_)), act_);
}

Var InvertedBottleneck::forward(const Var& x) const { return x + project_.forward(hidden(x)); }

void InvertedBottleneck::collect(const std::string& prefix, ParameterList& out) const {
  expand_.collect(prefix + ".expand", out);
  mid_.collect(prefix + ".mid", out);
  project_.collect(prefix + ".project", out);
}

AttentionBlock::AttentionBlock(int channels, Activation act, Rng& rng) : act_(act) {
  const int half = std::max(1, channels / 2);
  auto make_unit = [&] {
    return ResidualUnit{Conv2d(channels, half, 1, 1, 0, rng), Conv2d(half, half, 3, 1, 1, rng),
                        Conv2d(half, channels, 1, 1, 0, rng)};
  };
  for (int i = 0; i < 3; ++i) trunk_.push_back(make_unit());
  for (int i = 0; i < 3; ++i) mask_.push_back(make_unit());
  mask_out_ = Conv2d(channels, channels, 1, 1, 0, rng);
}

Var AttentionBlock::unit(const ResidualUnit& u, const Var& x) const {
  Var h = activate(u.a.forward(x), act_);
  h = activate(u.b.forward(h), act_);
  return activate(x + u.c.forward(h), act_);
}

Var AttentionBlock::forward(const Var& x) const {
  Var a = x;
  for (const auto& u : trunk_) a = unit(u, a);
  Var b = x;
  for (const auto& u : mask_) b = unit(u, b);
  return x + a * sigmoid(mask_out_.forward(b));
}

void AttentionBlock::collect(const std::string& prefix, ParameterList& out) const {
  for (std::size_t i = 0; i < trunk_.size(); ++i) {
    const std::string p = prefix + ".trunk." + std::to_string(i);
    trunk_[i].a.collect(p + ".a", out);
    trunk_[i].b.collect(p + ".b", out);
    trunk_[i].c.collect(p + ".c", out);
  }
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    const std::string p = prefix + ".mask." + std::to_string(i);
    mask_[i].a.collect(p + ".a", out);
    mask_[i].b.collect(p + ".b", out);
    mask_[i].c.collect(p + ".c", out);
  }
  mask_out_.collect(prefix + ".mask_out", out);
}

AnalysisTransform::AnalysisTransform(const TransformConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg.validate();
  const int n = cfg.n_channels;
  net_.add(wrap(Conv2d(3, n, 5, 2, 2, rng)));
  add_blocks(net_, cfg, rng);
  net_.add(wrap(Conv2d(n, n, 5, 2, 2, rng)));
  add_blocks(net_, cfg, rng);
  if (cfg.use_attention) net_.add(std::make_unique<AttentionBlock>(n, cfg.activation, rng));
  net_.add(wrap(Conv2d(n, n, 5, 2, 2, rng)));
  add_blocks(net_, cfg, rng);
  net_.add(wrap(Conv2d(n, cfg.m_channels, 5, 2, 2, rng)));
  if (cfg.use_attention) {
    net_.add(std::make_unique<AttentionBlock>(cfg.m_channels, cfg.activation, rng));
  }
}

Var AnalysisTransform::forward(const Var& x) const {
  require_channels(x, 3, "analysis");
  if (x.shape().h % 16 != 0 || x.shape().w % 16 != 0) {
    throw ConfigError("analysis: input " + x.shape().str() + " not padded to a multiple of 16");
  }
  if (!x.value().all_finite()) throw ValidationError("analysis: non-finite input");
  return net_.forward(x);
}

SynthesisTransform::SynthesisTransform(const TransformConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg.validate();
  const int n = cfg.n_channels;
  if (cfg.use_attention) {
    net_.add(std::make_unique<AttentionBlock>(cfg.m_channels, cfg.activation, rng));
  }
  net_.add(wrap(ConvTranspose2d(cfg.m_channels, n, 5, 2, 2, 1, rng)));
  add_blocks(net_, cfg, rng);
  net_.add(wrap(ConvTranspose2d(n, n, 5, 2, 2, 1, rng)));
  if (cfg.use_attention) net_.add(std::make_unique<AttentionBlock>(n, cfg.activation, rng));
  add_blocks(net_, cfg, rng);
  net_.add(wrap(ConvTranspose2d(n, n, 5, 2, 2, 1, rng)));
  add_blocks(net_, cfg, rng);
  auto last = std::make_unique<Wrapped<ConvTranspose2d>>(ConvTranspose2d(n, 3, 5, 2, 2, 1, rng));
  final_ = &last->inner();
  net_.add(std::move(last));
}

Var SynthesisTransform::forward(const Var& y_hat) const {
  require_channels(y_hat, cfg_.m_channels, "synthesis");
  return net_.forward(y_hat);
}

void SynthesisTransform::zero_final_weights() { final_->weight.mutable_value().fill(0.0); }

HyperAnalysis::HyperAnalysis(const TransformConfig& cfg, Rng& rng) : cfg_(cfg) {
  const int nz = cfg.z_channels;
  net_.add(wrap(Conv2d(cfg.m_channels, nz, 3, 1, 1, rng)));
  net_.add(std::make_unique<ActivationLayer>(cfg.activation));
  net_.add(wrap(Conv2d(nz, nz, 5, 2, 2, rng)));
  net_.add(std::make_unique<ActivationLayer>(cfg.activation));
  net_.add(wrap(Conv2d(nz, nz, 5, 2, 2, rng)));
}

Var HyperAnalysis::forward(const Var& y) const {
  require_channels(y, cfg_.m_channels, "hyper analysis");
  if (y.shape().h % 4 != 0 || y.shape().w % 4 != 0) {
    throw ConfigError("hyper analysis: latent " + y.shape().str() + " not a multiple of 4");
  }
  return net_.forward(y);
}

HyperSynthesis::HyperSynthesis(const TransformConfig& cfg, Rng& rng) : cfg_(cfg) {
  const int nz = cfg.z_channels;
  const int mid = nz * 3 / 2;
  net_.add(wrap(ConvTranspose2d(nz, nz, 5, 2, 2, 1, rng)));
  net_.add(std::make_unique<ActivationLayer>(cfg.activation));
  net_.add(wrap(ConvTranspose2d(nz, mid, 5, 2, 2, 1, rng)));
  net_.add(std::make_unique<ActivationLayer>(cfg.activation));
  net_.add(wrap(Conv2d(mid, 2 * cfg.m_channels, 3, 1, 1, rng)));
}

Var HyperSynthesis::forward(const Var& z_hat) const {
  require_channels(z_hat, cfg_.z_channels, "hyper synthesis");
  return net_.forward(z_hat);
}

}  // namespace hflic
