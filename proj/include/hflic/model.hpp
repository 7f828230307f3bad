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

#include <cstdint>
#include <string>

#include "hflic/entropy_model.hpp"
#include "hflic/transforms.hpp"

namespace hflic {

struct CodecConfig {
  TransformConfig transform;
  EntropyConfig entropy;
  std::uint64_t init_seed = 1;

  GroupPartition partition() const;
  void validate() const;
  std::string to_json() const;
  static CodecConfig from_json(const std::string& text);
};

// Analysis/synthesis transforms, hyperprior and the grouped checkerboard
// context model, with one shared parameter set.
class Codec {
 public:
  explicit Codec(const CodecConfig& cfg);
  Codec(const Codec&) = delete;
  Codec& operator=(const Codec&) = delete;
  Codec(Codec&&) = default;
  Codec& operator=(Codec&&) = default;

  const CodecConfig& config() const { return cfg_; }
  const GroupPartition& partition() const { return context_.partition(); }

  const AnalysisTransform& analysis() const { return g_a_; }
  const SynthesisTransform& synthesis() const { return g_s_; }
  SynthesisTransform& synthesis() { return g_s_; }
  const HyperAnalysis& hyper_analysis() const { return h_a_; }
  const HyperSynthesis& hyper_synthesis() const { return h_s_; }
  const FactorizedPrior& prior() const { return prior_; }
  const ContextModel& context() const { return context_; }

  ParameterList parameters() const;
  ParameterList transform_parameters() const;
  // Hyper transforms, factorized prior and context networks.
  ParameterList entropy_parameters() const;

  struct TrainOutput {
    Var x_hat;   // raw synthesis output
    Var y;       // analysis output
    Var y_hat;   // straight-through rounded latent
    Var bits_y;  // scalar, noisy-latent code length
    Var bits_z;  // scalar
  };
  // Mixed quantization: additive noise for both rate terms, straight-through
  // rounding on the path into the context model and synthesis.
  TrainOutput forward(const Var& x, Rng& rng) const;

  // 64-bit FNV-1a over the config record and every parameter.
  std::uint64_t model_id() const;

  // Overwrites weights with same-named tensors from `other`.
  void copy_weights_from(const Codec& other);

 private:
  CodecConfig cfg_;
  AnalysisTransform g_a_;
  SynthesisTransform g_s_;
  HyperAnalysis h_a_;
  HyperSynthesis h_s_;
  FactorizedPrior prior_;
  ContextModel context_;
};

// Replaces channels [offset, offset + count) of `base` with `part`.
Var with_channels(const Var& base, const Var& part, int offset);

}  // namespace hflic
