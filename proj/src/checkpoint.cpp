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

#include "hflic/checkpoint.hpp"

#include <json.hpp>

#include "hflic/errors.hpp"

namespace hflic {

using nlohmann::json;

namespace {

constexpr std::uint64_t kDiscriminatorSeed = 0xD15C;

}  // namespace

void load_weights(const TensorArchive& a, const std::string& prefix, const ParameterList& params) {
  for (const auto& p : params) p.var.mutable_value() = a.get(prefix + p.name, p.var.shape());
}

void save_checkpoint(const std::filesystem::path& path, const Codec& model, const Discriminator* disc,
                     const Adam* opt, const Adam* disc_opt, long step, const std::string& train_config) {
  TensorArchive a;
  json meta;
  meta["kind"] = "checkpoint";
  meta["format"] = kCheckpointFormat;
  meta["codec"] = json::parse(model.config().to_json());
  meta["train"] = json::parse(train_config);
  meta["step"] = step;
  meta["discriminator"] = disc != nullptr;
  meta["optimizer"] = opt != nullptr;
  meta["discriminator_optimizer"] = disc_opt != nullptr;
  a.metadata = meta.dump();
  for (const auto& p : model.parameters()) a.add("codec/" + p.name, p.var.value());
  if (disc) {
    for (const auto& p : disc->parameters()) a.add("disc/" + p.name, p.var.value());
  }
  if (opt) opt->save(a, "opt/");
  if (disc_opt) disc_opt->save(a, "disc_opt/");
  a.save(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("checkpoint not found: " + path.string());
  TensorArchive a = TensorArchive::load(path);
  json meta;
  try {
    meta = json::parse(a.metadata);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": bad checkpoint metadata: " + e.what());
  }
  if (meta.value("kind", "") != "checkpoint") throw ParseError(path.string() + ": not a checkpoint");
  if (meta.value("format", 0) != kCheckpointFormat) {
    throw ParseError(path.string() + ": unsupported checkpoint format");
  }
  Checkpoint ck;
  try {
    ck.model.emplace(CodecConfig::from_json(meta.at("codec").dump()));
    load_weights(a, "codec/", ck.model->parameters());
    if (meta.value("discriminator", false)) {
      Rng rng(kDiscriminatorSeed);
      ck.discriminator.emplace(ck.model->config().transform.m_channels, rng);
      load_weights(a, "disc/", ck.discriminator->parameters());
    }
    ck.train_config = meta.at("train").dump();
    ck.step = meta.at("step").get<long>();
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  for (auto& [name, t] : a.tensors) {
    if (name.rfind("opt/", 0) == 0 || name.rfind("disc_opt/", 0) == 0) ck.optimizer_state.add(name, t);
  }
  return ck;
}

}  // namespace hflic
