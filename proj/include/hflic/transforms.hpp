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

#include <memory>
#include <string>
#include <vector>

#include "hflic/nn.hpp"

namespace hflic {

struct TransformConfig {
  int n_channels = 32;  // hidden width N
  int m_channels = 48;  // latent width M
  int z_channels = 32;  // hyper-latent width
  int expansion_ratio = 2;
  int blocks_per_stage = 1;
  bool use_attention = false;
  Activation activation = Activation::kGelu;

  void validate() const;

  static TransformConfig desk() { return {}; }
  static TransformConfig full() { return {192, 320, 192, 2, 3, true, Activation::kGelu}; }
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Var forward(const Var& x) const = 0;
  virtual void collect(const std::string& prefix, ParameterList& out) const = 0;
};

class Sequential {
 public:
  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  Var forward(const Var& x) const;
  void collect(const std::string& prefix, ParameterList& out) const;
  std::size_t size() const { return layers_.size(); }
  const Layer& operator[](std::size_t i) const { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// Residual block x + project(act(mid(act(expand(x))))) whose hidden width is
// `ratio` times the input width: 1x1 expand, 3x3 mixing, 1x1 projection.
class InvertedBottleneck : public Layer {
 public:
  InvertedBottleneck(int channels, int ratio, Activation act, Rng& rng);

  Var forward(const Var& x) const override;
  // Activations after the 3x3 conv (hidden width).
  Var hidden(const Var& x) const;
  void collect(const std::string& prefix, ParameterList& out) const override;
  // Zero the projection; the block becomes the identity.
  void zero_init_projection() { project_.zero_init(); }

  int channels() const { return channels_; }
  int hidden_channels() const { return channels_ * ratio_; }

 private:
  int channels_;
  int ratio_;
  Activation act_;
  Conv2d expand_;
  Conv2d mid_;
  Conv2d project_;
};

// Simplified attention module: x + trunk(x) * sigmoid(mask(x)).
class AttentionBlock : public Layer {
 public:
  AttentionBlock(int channels, Activation act, Rng& rng);
  Var forward(const Var& x) const override;
  void collect(const std::string& prefix, ParameterList& out) const override;

 private:
  struct ResidualUnit {
    Conv2d a, b, c;
  };
  Var unit(const ResidualUnit& u, const Var& x) const;

  Activation act_;
  std::vector<ResidualUnit> trunk_;
  std::vector<ResidualUnit> mask_;
  Conv2d mask_out_;
};

// x (n,3,H,W) -> y (n,M,H/16,W/16)
class AnalysisTransform {
 public:
  AnalysisTransform(const TransformConfig& cfg, Rng& rng);
  Var forward(const Var& x) const;
  void collect(const std::string& prefix, ParameterList& out) const { net_.collect(prefix, out); }
  const Sequential& layers() const { return net_; }

 private:
  TransformConfig cfg_;
  Sequential net_;
};

// y_hat (n,M,h,w) -> x_hat (n,3,16h,16w); output is not clamped.
class SynthesisTransform {
 public:
  SynthesisTransform(const TransformConfig& cfg, Rng& rng);
  Var forward(const Var& y_hat) const;
  void collect(const std::string& prefix, ParameterList& out) const { net_.collect(prefix, out); }
  // Zero the weights (not bias) of the final layer.
  void zero_final_weights();
  const Var& final_bias() const { return final_->bias; }

 private:
  TransformConfig cfg_;
  Sequential net_;
  ConvTranspose2d* final_ = nullptr;
};

// y (n,M,h,w) -> z (n,Nz,h/4,w/4)
class HyperAnalysis {
 public:
  HyperAnalysis(const TransformConfig& cfg, Rng& rng);
  Var forward(const Var& y) const;
  void collect(const std::string& prefix, ParameterList& out) const { net_.collect(prefix, out); }

 private:
  TransformConfig cfg_;
  Sequential net_;
};

// z_hat (n,Nz,h,w) -> hyper features (n,2M,4h,4w)
class HyperSynthesis {
 public:
  HyperSynthesis(const TransformConfig& cfg, Rng& rng);
  Var forward(const Var& z_hat) const;
  void collect(const std::string& prefix, ParameterList& out) const { net_.collect(prefix, out); }
  int out_channels() const { return 2 * cfg_.m_channels; }

 private:
  TransformConfig cfg_;
  Sequential net_;
};

}  // namespace hflic
