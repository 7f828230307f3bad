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
#include <string>
#include <vector>

#include "hflic/model.hpp"
#include "hflic/training.hpp"

namespace hflic {

struct EvalConfig {
  std::string extractor = "random";
  int repetitions = 10;
  int workers = 1;
  std::vector<int> bench_groups{5, 10};

  void validate() const;
};

// Whole-run configuration. The file format is documented in docs/config.md;
// every object rejects unknown keys and missing keys keep their defaults.
struct RunConfig {
  CodecConfig codec;
  TrainConfig train;
  EvalConfig eval;

  void validate() const;
  // Sets codec.init_seed and train.seed.
  void set_seed(std::uint64_t seed);
  std::string to_json() const;
  // Merges `text` over `base`. Throws ParseError for malformed JSON and
  // ConfigError for unknown keys, wrong types or invalid values.
  static RunConfig from_json(const std::string& text, const RunConfig& base = {},
                             const std::string& source = "<config>");
  static RunConfig load(const std::filesystem::path& path, const RunConfig& base = {});
};

std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text, const TrainConfig& base = {});

}  // namespace hflic
