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

#include "hflic/training.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hflic/config.hpp"
#include "hflic/errors.hpp"
#include "hflic/image_io.hpp"

namespace hflic {

using nlohmann::json;

namespace {

constexpr std::uint64_t kDiscriminatorSeed = 0xD15C;

void check_finite(double v, const char* term, long step) {
  if (!std::isfinite(v)) {
    throw TrainingError("non-finite " + std::string(term) + " at step " + std::to_string(step));
  }
}

double accuracy(const Tensor& real, const Tensor& fake) {
  double hits = 0.0;
  for (double v : real.values()) hits += v > 0.0 ? 1.0 : 0.0;
  for (double v : fake.values()) hits += v < 0.0 ? 1.0 : 0.0;
  return hits / static_cast<double>(real.numel() + fake.numel());
}

}  // namespace

std::vector<Stage> paper_schedule() {
  return {{500, 1e-4, true}, {100, 1e-4, false}, {30, 3e-5, false},
          {30, 1e-5, false}, {30, 3e-6, false},  {30, 1e-6, false}};
}

std::vector<Stage> desk_schedule(int divisor) {
  if (divisor < 1) throw ConfigError("epoch divisor must be >= 1");
  std::vector<Stage> out = paper_schedule();
  for (Stage& s : out) s.epochs = (s.epochs + divisor - 1) / divisor;
  return out;
}

double lr_schedule(const std::vector<Stage>& schedule, int stage_index) {
  if (stage_index < 0 || stage_index >= static_cast<int>(schedule.size())) {
    throw ConfigError("stage " + std::to_string(stage_index) + " outside schedule of " +
                      std::to_string(schedule.size()) + " stages");
  }
  return schedule[stage_index].lr;
}

int stage_at_epoch(const std::vector<Stage>& schedule, int epoch) {
  int end = 0;
  for (std::size_t s = 0; s < schedule.size(); ++s) {
    end += schedule[s].epochs;
    if (epoch < end) return static_cast<int>(s);
  }
  return static_cast<int>(schedule.size()) - 1;
}

std::string to_string(TrainPhase p) { return p == TrainPhase::kBase ? "base" : "perceptual"; }

TrainPhase train_phase_from_string(const std::string& s) {
  if (s == "base") return TrainPhase::kBase;
  if (s == "perceptual") return TrainPhase::kPerceptual;
  throw ConfigError("unknown training phase '" + s + "'");
}

void TrainConfig::validate() const {
  if (schedule.empty()) throw ConfigError("train.schedule must not be empty");
  for (const Stage& s : schedule) {
    if (s.epochs < 1) throw ConfigError("train.schedule epochs must be >= 1");
    if (!(s.lr > 0.0)) throw ConfigError("train.schedule learning rates must be > 0");
  }
  if (!(lambda >= 0.0) || !(warmup_lambda >= 0.0)) throw ConfigError("train.lambda must be >= 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (crop_size < 64 || crop_size % 64 != 0) throw ConfigError("train.crop_size must be a multiple of 64");
  if (max_steps < 0) throw ConfigError("train.max_steps must be >= 0");
  if (!(grad_clip > 0.0)) throw ConfigError("train.grad_clip must be > 0");
  if (style_patch < 1) throw ConfigError("train.style_patch must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be >= 0");
  weights.validate();
  masks.validate();
}

// ---- data ------------------------------------------------------------------------

void Dataset::add(std::string id, Tensor image, const DetectionSet& detections, const MaskConfig& masks) {
  const Shape s = image.shape();
  if (s.n != 1 || s.c != 3) throw ConfigError("dataset image '" + id + "' must be (1,3,H,W)");
  if (!std::all_of(image.data(), image.data() + image.numel(), [](double v) { return std::isfinite(v); })) {
    throw ValidationError("dataset image '" + id + "' has non-finite pixels");
  }
  const RegionMasks m = build_masks(detections, s.h, s.w, masks);
  images_.push_back({std::move(id), std::move(image), m.face});
}

Dataset Dataset::from_directory(const std::filesystem::path& dir,
                                const std::vector<DetectionSet>& detections, const MaskConfig& masks) {
  Dataset d;
  for (const auto& path : list_png_files(dir)) {
    const std::string id = path.filename().string();
    d.add(id, read_png(path), find_detections(detections, id), masks);
  }
  if (d.size() == 0) throw IoError("no PNG images in " + dir.string());
  return d;
}

Batch make_batch(const Dataset& data, const std::vector<std::size_t>& indices, int crop,
                 int pyramid_levels, Rng& rng) {
  std::vector<Tensor> xs, faces;
  for (std::size_t idx : indices) {
    const TrainingImage& img = data[idx];
    Tensor x = img.image, f = img.face;
    const Shape s = x.shape();
    if (s.h < crop || s.w < crop) {
      x = pad_replicate(x, std::max(s.h, crop), std::max(s.w, crop));
      f = pad_replicate(f, std::max(s.h, crop), std::max(s.w, crop));
    }
    const int top = static_cast<int>(rng.below(x.shape().h - crop + 1));
    const int left = static_cast<int>(rng.below(x.shape().w - crop + 1));
    Tensor cx(Shape{1, 3, crop, crop}), cf(Shape{1, 1, crop, crop});
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < crop; ++i)
        for (int j = 0; j < crop; ++j) cx.at(0, c, i, j) = x.at(0, c, top + i, left + j);
    for (int i = 0; i < crop; ++i)
      for (int j = 0; j < crop; ++j) cf.at(0, 0, i, j) = f.at(0, 0, top + i, left + j);
    xs.push_back(std::move(cx));
    faces.push_back(std::move(cf));
  }
  Batch b;
  b.x = concat_batch(xs);
  b.masks.face = concat_batch(faces);
  b.masks.perc = Tensor(b.masks.face.shape());
  for (std::size_t i = 0; i < b.masks.face.numel(); ++i) {
    b.masks.perc.values()[i] = 1.0 - b.masks.face.values()[i];
  }
  b.masks.face_pyramid = mask_pyramid(b.masks.face, pyramid_levels);
  b.masks.perc_pyramid = mask_pyramid(b.masks.perc, pyramid_levels);
  return b;
}

std::string StepRecord::to_json() const {
  json j{{"step", step},   {"epoch", epoch},   {"stage", stage},          {"lr", lr},
         {"lambda", lambda}, {"loss", loss},   {"bpp", bpp},              {"mse", mse},
         {"grad_norm", grad_norm}};
  if (terms.total != 0.0) {
    j["terms"] = {{"rec", terms.rec},   {"lpips", terms.lpips}, {"adv", terms.adv},
                  {"sty", terms.sty},   {"face", terms.face},   {"rate", terms.rate}};
    j["d_loss"] = d_loss;
    j["d_accuracy"] = d_accuracy;
  }
  return j.dump();
}

// ---- trainer ---------------------------------------------------------------------

Trainer::Trainer(Codec model, TrainConfig cfg) : model_(std::move(model)), cfg_(std::move(cfg)) { init(); }

Trainer::Trainer(Checkpoint ckpt, TrainConfig cfg) : model_(std::move(*ckpt.model)), cfg_(std::move(cfg)) {
  if (ckpt.discriminator) disc_.emplace(std::move(*ckpt.discriminator));
  init();
  // Resume only when the checkpoint came from the same phase.
  bool same_phase = false;
  try {
    const json snap = json::parse(ckpt.train_config);
    same_phase = snap.is_object() && snap.value("phase", "") == to_string(cfg_.phase);
  } catch (const json::exception&) {
  }
  if (same_phase && ckpt.optimizer_state.find("opt/t")) {
    opt_->load(ckpt.optimizer_state, "opt/");
    if (disc_opt_ && ckpt.optimizer_state.find("disc_opt/t")) disc_opt_->load(ckpt.optimizer_state, "disc_opt/");
    step_ = ckpt.step;
    data_rng_ = Rng(cfg_.seed * 0x9E3779B97F4A7C15ull + 1 + static_cast<std::uint64_t>(step_));
    noise_rng_ = Rng(cfg_.seed * 0x9E3779B97F4A7C15ull + 2 + static_cast<std::uint64_t>(step_));
  }
}

void Trainer::init() {
  cfg_.validate();
  data_rng_ = Rng(cfg_.seed * 0x9E3779B97F4A7C15ull + 1);
  noise_rng_ = Rng(cfg_.seed * 0x9E3779B97F4A7C15ull + 2);
  if (cfg_.phase == TrainPhase::kBase) {
    disc_.reset();
    opt_.emplace(model_.parameters(), cfg_.adam);
    return;
  }
  opt_.emplace(cfg_.freeze_entropy ? model_.transform_parameters() : model_.parameters(), cfg_.adam);
  if (cfg_.weights.w_adv > 0.0) {
    if (!disc_) {
      Rng rng(kDiscriminatorSeed ^ cfg_.seed);
      disc_.emplace(model_.config().transform.m_channels, rng);
    }
    disc_opt_.emplace(disc_->parameters(), cfg_.adam);
  } else {
    disc_.reset();
  }
  if (cfg_.weights.w_lpips > 0.0 || cfg_.weights.w_sty > 0.0) fx_ = make_extractor(cfg_.extractor);
}

long Trainer::steps_per_epoch(const Dataset& data) const {
  return (static_cast<long>(data.size()) + cfg_.batch_size - 1) / cfg_.batch_size;
}

long Trainer::total_steps(const Dataset& data) const {
  if (cfg_.max_steps > 0) return cfg_.max_steps;
  long epochs = 0;
  for (const Stage& s : cfg_.schedule) epochs += s.epochs;
  return epochs * steps_per_epoch(data);
}

std::vector<std::size_t> Trainer::next_indices(const Dataset& data) {
  const long spe = steps_per_epoch(data);
  const long pos = step_ % spe;
  if (pos == 0 || order_.size() != data.size()) {
    order_.resize(data.size());
    std::iota(order_.begin(), order_.end(), 0);
    for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[data_rng_.below(i)]);
  }
  const std::size_t begin = static_cast<std::size_t>(pos) * cfg_.batch_size;
  const std::size_t end = std::min(order_.size(), begin + cfg_.batch_size);
  return {order_.begin() + begin, order_.begin() + end};
}

StepRecord Trainer::step(const Dataset& data) {
  if (data.size() == 0) throw ConfigError("training needs at least one image");
  StepRecord rec;
  rec.step = step_ + 1;
  rec.epoch = static_cast<int>(step_ / steps_per_epoch(data));
  rec.stage = stage_at_epoch(cfg_.schedule, rec.epoch);
  rec.lr = lr_schedule(cfg_.schedule, rec.stage);
  const Batch batch = make_batch(data, next_indices(data), cfg_.crop_size, cfg_.masks.pyramid_levels, data_rng_);
  rec = cfg_.phase == TrainPhase::kBase ? base_step(batch, rec) : perceptual_step(batch, rec);
  ++step_;
  return rec;
}

StepRecord Trainer::base_step(const Batch& batch, StepRecord rec) {
  rec.lambda = cfg_.schedule[rec.stage].warmup ? cfg_.warmup_lambda : cfg_.lambda;
  const ParameterList& params = opt_->parameters();
  zero_grads(params);
  const Var x = Var::constant(batch.x);
  const auto out = model_.forward(x, noise_rng_);
  const Shape s = batch.x.shape();
  const Var bpp = (out.bits_y + out.bits_z) * (1.0 / (static_cast<double>(s.n) * s.h * s.w));
  const Var mse = mean(square(out.x_hat - x));
  const Var loss = bpp + mse * (rec.lambda * kMseScale);
  rec.bpp = bpp.item();
  rec.mse = mse.item();
  rec.loss = loss.item();
  check_finite(rec.bpp, "rate", rec.step);
  check_finite(rec.mse, "mse", rec.step);
  backward(loss);
  rec.grad_norm = clip_grad_norm(params, cfg_.grad_clip);
  check_finite(rec.grad_norm, "gradient", rec.step);
  opt_->step(rec.lr);
  return rec;
}

StepRecord Trainer::perceptual_step(const Batch& batch, StepRecord rec) {
  rec.lambda = cfg_.weights.lambda_rate;
  const Var x = Var::constant(batch.x);

  // Generator step: the discriminator's weights are not updated.
  zero_grads(model_.parameters());
  const auto out = model_.forward(x, noise_rng_);
  LossInputs in;
  in.x = x;
  in.x_hat = out.x_hat;
  in.bits = out.bits_y + out.bits_z;
  in.masks = &batch.masks;
  in.style_patch = cfg_.style_patch;
  if (disc_) in.fake_logits = disc_->forward(out.x_hat, detach(out.y_hat));
  const LossResult loss = total_loss(in, cfg_.weights, fx_.get());
  rec.terms = loss.weighted;
  rec.loss = loss.weighted.total;
  rec.bpp = loss.raw.rate;
  rec.mse = mean(square(detach(out.x_hat) - x)).item();
  const std::pair<const char*, double> terms[] = {
      {"rec", loss.raw.rec}, {"lpips", loss.raw.lpips}, {"adv", loss.raw.adv},
      {"sty", loss.raw.sty}, {"face", loss.raw.face},   {"rate", loss.raw.rate}};
  for (const auto& [name, v] : terms) check_finite(v, name, rec.step);
  backward(loss.total);
  rec.grad_norm = clip_grad_norm(opt_->parameters(), cfg_.grad_clip);
  check_finite(rec.grad_norm, "gradient", rec.step);
  opt_->step(rec.lr);

  // Discriminator step on detached inputs: codec weights are not touched.
  if (disc_) {
    const ParameterList dparams = disc_->parameters();
    zero_grads(dparams);
    const Var cond = detach(out.y_hat);
    const Var real = disc_->forward(x, cond);
    const Var fake = disc_->forward(detach(out.x_hat), cond);
    const Var d_loss = hinge_d(real, fake);
    rec.d_loss = d_loss.item();
    rec.d_accuracy = accuracy(real.value(), fake.value());
    check_finite(rec.d_loss, "discriminator", rec.step);
    backward(d_loss);
    clip_grad_norm(dparams, cfg_.grad_clip);
    disc_opt_->step(rec.lr);
  }
  zero_grads(model_.parameters());
  return rec;
}

std::vector<StepRecord> Trainer::run(const Dataset& data, std::ostream* log,
                                     const std::optional<std::filesystem::path>& out_dir,
                                     const std::function<void(const StepRecord&)>& on_step) {
  std::vector<StepRecord> records;
  const long total = total_steps(data);
  if (out_dir) std::filesystem::create_directories(*out_dir);
  while (step_ < total) {
    records.push_back(step(data));
    if (log) *log << records.back().to_json() << '\n' << std::flush;
    if (on_step) on_step(records.back());
    if (out_dir && cfg_.checkpoint_every > 0 && step_ % cfg_.checkpoint_every == 0 && step_ < total) {
      save(*out_dir / ("step_" + std::to_string(step_) + ".hfck"));
    }
  }
  if (out_dir) save(*out_dir / "final.hfck");
  return records;
}

void Trainer::save(const std::filesystem::path& path) const {
  save_checkpoint(path, model_, disc_ ? &*disc_ : nullptr, opt_ ? &*opt_ : nullptr,
                  disc_opt_ ? &*disc_opt_ : nullptr, step_, train_config_to_json(cfg_));
}

Checkpoint Trainer::release() && {
  Checkpoint ck;
  if (opt_) opt_->save(ck.optimizer_state, "opt/");
  if (disc_opt_) disc_opt_->save(ck.optimizer_state, "disc_opt/");
  ck.train_config = train_config_to_json(cfg_);
  ck.step = step_;
  ck.model.emplace(std::move(model_));
  if (disc_) ck.discriminator.emplace(std::move(*disc_));
  return ck;
}

Checkpoint train_base(const Dataset& data, const CodecConfig& codec, const TrainConfig& cfg,
                      std::ostream* log) {
  TrainConfig c = cfg;
  c.phase = TrainPhase::kBase;
  Trainer t(Codec(codec), c);
  t.run(data, log);
  return std::move(t).release();
}

Checkpoint train_perceptual(Checkpoint base, const Dataset& data, const TrainConfig& cfg,
                            std::ostream* log) {
  TrainConfig c = cfg;
  c.phase = TrainPhase::kPerceptual;
  Trainer t(std::move(base), c);
  t.run(data, log);
  return std::move(t).release();
}

}  // namespace hflic
