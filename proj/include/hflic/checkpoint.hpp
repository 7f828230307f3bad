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
#include <optional>
#include <string>

#include "hflic/archive.hpp"
#include "hflic/losses.hpp"
#include "hflic/model.hpp"
#include "hflic/optimizer.hpp"

namespace hflic {

inline constexpr int kCheckpointFormat = 1;

// Codec weights "codec/<name>", discriminator "disc/<name>", optimizer
// moments under "opt/" and "disc_opt/". Metadata holds the codec config, the
// training config snapshot and the step counter.
struct Checkpoint {
  std::optional<Codec> model;
  std::optional<Discriminator> discriminator;
  std::string train_config = "null";  // JSON
  long step = 0;
  TensorArchive optimizer_state;      // the "opt/" and "disc_opt/" entries
};

void save_checkpoint(const std::filesystem::path& path, const Codec& model,
                     const Discriminator* disc = nullptr, const Adam* opt = nullptr,
                     const Adam* disc_opt = nullptr, long step = 0,
                     const std::string& train_config = "null");

// IoError when the file is missing, ParseError when it is not a checkpoint.
Checkpoint load_checkpoint(const std::filesystem::path& path);

void load_weights(const TensorArchive& a, const std::string& prefix, const ParameterList& params);

}  // namespace hflic
