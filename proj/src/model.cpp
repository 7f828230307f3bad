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

#include "hflic/model.hpp"

#include <cstring>
#include <map>
#include <utility>
#include <json.hpp>

#include "hflic/errors.hpp"

namespace hflic {

using nlohmann::json;

GroupPartition CodecConfig::partition() const {
  const int m = transform.m_channels;
  return entropy.groups.empty() ? GroupPartition::default_for(m)
                                : GroupPartition(m, entropy.groups);
}

void CodecConfig::validate() const {
  transform.validate();
  (void)partition();
  if (entropy.sigma_min <= 0.0) throw ConfigError("entropy.sigma_min must be > 0");
  if (entropy.context_hidden < 1) throw ConfigError("entropy.context_hidden must be >= 1");
  if (entropy.mixture_components < 1) throw ConfigError("entropy.mixture_components must be >= 1");
}

std::string CodecConfig::to_json() const {
  json j;
  j["transform"] = {{"n_channels", transform.n_channels},
                    {"m_channels", transform.m_channels},
                    {"z_channels", transform.z_channels},
                    {"expansion_ratio", transform.expansion_ratio},
                    {"blocks_per_stage", transform.blocks_per_stage},
                    {"use_attention", transform.use_attention},
                    {"activation", std::string(to_string(transform.activation))}};
  j["entropy"] = {{"groups", partition().sizes()},
                  {"sigma_min", entropy.sigma_min},
                  {"context_hidden", entropy.context_hidden},
                  {"mixture_components", entropy.mixture_components}};
  j["init_seed"] = init_seed;
  return j.dump();
}

CodecConfig CodecConfig::from_json(const std::string& text) {
  CodecConfig cfg;
  try {
    const json j = json::parse(text);
    const json& t = j.at("transform");
    cfg.transform.n_channels = t.at("n_channels").get<int>();
    cfg.transform.m_channels = t.at("m_channels").get<int>();
    cfg.transform.z_channels = t.at("z_channels").get<int>();
    cfg.transform.expansion_ratio = t.at("expansion_ratio").get<int>();
    cfg.transform.blocks_per_stage = t.at("blocks_per_stage").get<int>();
    cfg.transform.use_attention = t.at("use_attention").get<bool>();
    cfg.transform.activation = activation_from_string(t.at("activation").get<std::string>());
    const json& e = j.at("entropy");
    cfg.entropy.groups = e.at("groups").get<std::vector<int>>();
    cfg.entropy.sigma_min = e.at("sigma_min").get<double>();
    cfg.entropy.context_hidden = e.at("context_hidden").get<int>();
    cfg.entropy.mixture_components = e.at("mixture_components").get<int>();
    cfg.init_seed = j.at("init_seed").get<std::uint64_t>();
  } catch (const json::exception& ex) {
    throw ParseError(std::string("codec config: ") + ex.what());
  }
  cfg.validate();
  return cfg;
}

namespace {
// Each sub-network draws from its own stream so that changing one part of
// the config leaves the others' initial weights unchanged.
template <class T, class... Args>
T seeded(std::uint64_t seed, std::uint64_t salt, Args&&... args) {
  Rng rng(seed * 0x9E3779B97F4A7C15ull + salt);
  return T(std::forward<Args>(args)..., rng);
}
}  // namespace

Codec::Codec(const CodecConfig& cfg)
    : cfg_((cfg.validate(), cfg)),
      g_a_(seeded<AnalysisTransform>(cfg.init_seed, 1, cfg.transform)),
      g_s_(seeded<SynthesisTransform>(cfg.init_seed, 2, cfg.transform)),
      h_a_(seeded<HyperAnalysis>(cfg.init_seed, 3, cfg.transform)),
      h_s_(seeded<HyperSynthesis>(cfg.init_seed, 4, cfg.transform)),
      prior_(seeded<FactorizedPrior>(cfg.init_seed, 5, cfg.transform.z_channels,
                                     cfg.entropy.mixture_components)),
      context_(seeded<ContextModel>(cfg.init_seed, 6, cfg.transform.m_channels,
                                    2 * cfg.transform.m_channels, cfg.partition(), cfg.entropy)) {}

ParameterList Codec::transform_parameters() const {
  ParameterList out;
  g_a_.collect("g_a", out);
  g_s_.collect("g_s", out);
  return out;
}

ParameterList Codec::entropy_parameters() const {
  ParameterList out;
  h_a_.collect("h_a", out);
  h_s_.collect("h_s", out);
  prior_.collect("prior", out);
  context_.collect("context", out);
  return out;
}

ParameterList Codec::parameters() const {
  ParameterList out = transform_parameters();
  ParameterList e = entropy_parameters();
  out.insert(out.end(), e.begin(), e.end());
  return out;
}

Var with_channels(const Var& base, const Var& part, int offset) {
  const int c = base.shape().c;
  const int k = part.shape().c;
  std::vector<Var> pieces;
  if (offset > 0) pieces.push_back(slice_channels(base, 0, offset));
  pieces.push_back(part);
  if (offset + k < c) pieces.push_back(slice_channels(base, offset + k, c - offset - k));
  return concat_channels(pieces);
}

Codec::TrainOutput Codec::forward(const Var& x, Rng& rng) const {
  TrainOutput out;
  out.y = g_a_.forward(x);
  const Var z = h_a_.forward(out.y);
  const Var zero_z = Var::constant(Tensor(z.shape()));
  out.bits_z = sum(prior_.bits(quantize(z, zero_z, QuantMode::kAdditiveNoise, &rng)));
  const Var hyper = h_s_.forward(quantize(z, zero_z, QuantMode::kSteRound));

  const Shape ys = out.y.shape();
  const Var anchor_mask =
      Var::constant(checkerboard_mask(ys.h, ys.w, CheckerboardPhase::kAnchor));
  const Var non_anchor_mask =
      Var::constant(checkerboard_mask(ys.h, ys.w, CheckerboardPhase::kNonAnchor));

  Var y_hat = Var::constant(Tensor(ys));
  std::vector<Var> bits;
  const GroupPartition& part = partition();
  for (int g = 0; g < part.count(); ++g) {
    const int off = part.offset(g);
    const int sz = part.size(g);
    const Var y_g = slice_channels(out.y, off, sz);

    const GaussianParams pa = context_.params(hyper, y_hat, g, CheckerboardPhase::kAnchor);
    const Var anchors = quantize(y_g, pa.mu, QuantMode::kSteRound) * anchor_mask;
    y_hat = with_channels(y_hat, anchors, off);

    const GaussianParams pn = context_.params(hyper, y_hat, g, CheckerboardPhase::kNonAnchor);
    const Var rest = quantize(y_g, pn.mu, QuantMode::kSteRound) * non_anchor_mask;
    y_hat = with_channels(y_hat, anchors + rest, off);

    const Var mu = pa.mu * anchor_mask + pn.mu * non_anchor_mask;
    const Var sigma = pa.sigma * anchor_mask + pn.sigma * non_anchor_mask;
    const Var noisy = quantize(y_g, mu, QuantMode::kAdditiveNoise, &rng);
    bits.push_back(sum(gaussian_bits(noisy, mu, sigma)));
  }
  Var total = bits[0];
  for (std::size_t i = 1; i < bits.size(); ++i) total = total + bits[i];
  out.bits_y = total;
  out.y_hat = y_hat;
  out.x_hat = g_s_.forward(y_hat);
  return out;
}

std::uint64_t Codec::model_id() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ull;
    }
  };
  const std::string cfg = cfg_.to_json();
  feed(cfg.data(), cfg.size());
  for (const auto& p : parameters()) {
    feed(p.name.data(), p.name.size());
    feed(p.var.value().data(), p.var.value().numel() * sizeof(double));
  }
  return h;
}

void Codec::copy_weights_from(const Codec& other) {
  std::map<std::string, Var> theirs;
  for (const auto& p : other.parameters()) theirs.emplace(p.name, p.var);
  for (const auto& p : parameters()) {
    auto it = theirs.find(p.name);
    if (it == theirs.end() || !(it->second.shape() == p.var.shape())) continue;
    p.var.mutable_value() = it->second.value();
  }
}

}  // namespace hflic
