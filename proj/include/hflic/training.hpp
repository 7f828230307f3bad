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
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hflic/checkpoint.hpp"
#include "hflic/losses.hpp"
#include "hflic/masks.hpp"
#include "hflic/model.hpp"
#include "hflic/optimizer.hpp"

namespace hflic {

// A stage trains `epochs` epochs at `lr`; warmup stages use warmup_lambda.
struct Stage {
  int epochs = 1;
  double lr = 1e-4;
  bool warmup = false;
};

// 500 @ 1e-4 (warmup), 100 @ 1e-4, then 30 each @ 3e-5, 1e-5, 3e-6, 1e-6.
std::vector<Stage> paper_schedule();
// Paper schedule with epoch counts ceil(epochs / divisor).
std::vector<Stage> desk_schedule(int divisor = 100);
// Throws ConfigError for an out-of-range stage.
double lr_schedule(const std::vector<Stage>& schedule, int stage_index);
// Stage containing `epoch`; epochs past the end stay in the last stage.
int stage_at_epoch(const std::vector<Stage>& schedule, int epoch);

enum class TrainPhase { kBase, kPerceptual };

struct TrainConfig {
  TrainPhase phase = TrainPhase::kBase;
  double lambda = 0.0075;          // base: R + lambda * 255^2 * MSE
  double warmup_lambda = 0.015;
  int batch_size = 4;
  int crop_size = 64;
  std::vector<Stage> schedule = desk_schedule();
  std::uint64_t seed = 1;
  long max_steps = 0;              // 0: run the whole schedule
  double grad_clip = 1.0;
  AdamConfig adam;
  bool freeze_entropy = false;     // perceptual phase only
  LossWeights weights;             // perceptual: D + lambda_rate * R
  MaskConfig masks;
  std::string extractor = "random";
  int style_patch = 16;
  long checkpoint_every = 0;       // 0: final checkpoint only

  void validate() const;
};

std::string to_string(TrainPhase p);
TrainPhase train_phase_from_string(const std::string& s);

struct TrainingImage {
  std::string id;
  Tensor image;  // (1,3,H,W)
  Tensor face;   // (1,1,H,W) small-face mask at full resolution
};

class Dataset {
 public:
  void add(std::string id, Tensor image, const DetectionSet& detections = {},
           const MaskConfig& masks = {});
  // Every PNG in `dir`; detections matched by file name.
  static Dataset from_directory(const std::filesystem::path& dir,
                                const std::vector<DetectionSet>& detections = {},
                                const MaskConfig& masks = {});
  std::size_t size() const { return images_.size(); }
  const TrainingImage& operator[](std::size_t i) const { return images_[i]; }

 private:
  std::vector<TrainingImage> images_;
};

struct Batch {
  Tensor x;            // (n,3,crop,crop)
  RegionMasks masks;
};

// Random crop of each image (replicate-padded when smaller than `crop`).
Batch make_batch(const Dataset& data, const std::vector<std::size_t>& indices, int crop,
                 int pyramid_levels, Rng& rng);

struct StepRecord {
  long step = 0;
  int epoch = 0;
  int stage = 0;
  double lr = 0.0;
  double lambda = 0.0;
  double loss = 0.0;
  double bpp = 0.0;     // estimated rate of the batch
  double mse = 0.0;
  LossBreakdown terms;  // perceptual phase, weighted
  double d_loss = 0.0;
  double d_accuracy = 0.0;
  double grad_norm = 0.0;

  std::string to_json() const;
};

class Trainer {
 public:
  Trainer(Codec model, TrainConfig cfg);
  // Continues from a checkpoint; optimizer state and step are restored when
  // the checkpoint was written by the same phase.
  Trainer(Checkpoint ckpt, TrainConfig cfg);

  long total_steps(const Dataset& data) const;
  long steps_per_epoch(const Dataset& data) const;
  // One optimizer step (perceptual: generator step, then discriminator step).
  StepRecord step(const Dataset& data);
  // Runs until total_steps; writes a JSON line per step to `log` and
  // checkpoints into `out_dir` (checkpoint_every and at the end).
  std::vector<StepRecord> run(const Dataset& data, std::ostream* log = nullptr,
                              const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                              const std::function<void(const StepRecord&)>& on_step = {});
  void save(const std::filesystem::path& path) const;
  // Moves the model, discriminator and optimizer state out.
  Checkpoint release() &&;

  const Codec& model() const { return model_; }
  Codec& model() { return model_; }
  const Discriminator* discriminator() const { return disc_ ? &*disc_ : nullptr; }
  const TrainConfig& config() const { return cfg_; }
  long steps_done() const { return step_; }

 private:
  void init();
  std::vector<std::size_t> next_indices(const Dataset& data);
  StepRecord base_step(const Batch& batch, StepRecord rec);
  StepRecord perceptual_step(const Batch& batch, StepRecord rec);

  Codec model_;
  TrainConfig cfg_;
  std::optional<Discriminator> disc_;
  std::optional<Adam> opt_;
  std::optional<Adam> disc_opt_;
  std::unique_ptr<FeatureExtractor> fx_;
  long step_ = 0;
  Rng data_rng_{1};
  Rng noise_rng_{2};
  std::vector<std::size_t> order_;
};

// R + lambda * 255^2 * MSE training from scratch.
Checkpoint train_base(const Dataset& data, const CodecConfig& codec, const TrainConfig& cfg,
                      std::ostream* log = nullptr);
// D + lambda * R fine-tuning of a base checkpoint.
Checkpoint train_perceptual(Checkpoint base, const Dataset& data, const TrainConfig& cfg,
                            std::ostream* log = nullptr);

// 255^2 scale of the MSE term.
inline constexpr double kMseScale = 255.0 * 255.0;

}  // namespace hflic
