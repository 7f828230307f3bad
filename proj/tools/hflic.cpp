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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "hflic/archive.hpp"
#include "hflic/bitstream.hpp"
#include "hflic/checkpoint.hpp"
#include "hflic/config.hpp"
#include "hflic/errors.hpp"
#include "hflic/eval.hpp"
#include "hflic/image_io.hpp"
#include "hflic/synthetic.hpp"
#include "hflic/training.hpp"

namespace fs = std::filesystem;
using namespace hflic;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kMissingCheckpoint = 2,
  kModelMismatch = 3,
  kCorruptPayload = 4,
};

struct Exit {
  int code;
  std::string message;
};

Codec load_model(const fs::path& path) {
  try {
    Checkpoint ck = load_checkpoint(path);
    if (!ck.model) throw ParseError("checkpoint has no codec");
    return std::move(*ck.model);
  } catch (const IoError& e) {
    throw Exit{kMissingCheckpoint, "cannot read checkpoint: " + std::string(e.what())};
  } catch (const ParseError& e) {
    throw Exit{kMissingCheckpoint, "not a usable checkpoint: " + std::string(e.what())};
  }
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs, const std::string& ext) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        std::string x = e.path().extension().string();
        std::transform(x.begin(), x.end(), x.begin(), [](unsigned char c) { return std::tolower(c); });
        if (e.is_regular_file() && x == ext) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (fs::exists(p)) {
      out.push_back(p);
    } else {
      throw Exit{kFailure, "no such input: " + in};
    }
  }
  if (out.empty()) throw Exit{kFailure, "no " + ext + " inputs found"};
  return out;
}

template <class F>
void parallel_for(std::size_t n, int workers, F&& f) {
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) f(i);
  };
  std::vector<std::thread> pool;
  const int k = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  for (int i = 1; i < k; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

void write_text(const fs::path& p, const std::string& s) {
  write_file_atomic(p, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---- options shared by several subcommands ----------------------------------------

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out = ".";
};

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
  cmd->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Seed for initialization and training");
  cmd->add_option("--workers", c.workers, "Parallel per-image workers")->check(CLI::PositiveNumber);
  if (with_out) cmd->add_option("--out", c.out, "Output directory")->required();
}

RunConfig resolve(const Common& c) {
  RunConfig cfg;
  if (!c.config.empty()) cfg = RunConfig::load(c.config, cfg);
  if (c.seed) cfg.set_seed(*c.seed);
  if (c.workers) cfg.eval.workers = *c.workers;
  cfg.validate();
  return cfg;
}

// ---- compress / decompress -----------------------------------------------------------

int cmd_compress(const Common& common, const std::vector<std::string>& inputs, const std::string& ckpt) {
  const RunConfig cfg = resolve(common);
  const Codec model = load_model(ckpt);
  const auto files = expand_inputs(inputs, ".png");
  fs::create_directories(common.out);
  std::vector<std::string> lines(files.size());
  std::mutex error_mutex;
  std::optional<std::string> error;
  parallel_for(files.size(), cfg.eval.workers, [&](std::size_t i) {
    try {
      NoGradGuard guard;
      const Tensor img = read_png(files[i]);
      const EncodeResult enc = encode_image(img, model);
      const auto bytes = enc.bitstream.serialize();
      write_file_atomic(fs::path(common.out) / (files[i].stem().string() + ".hflc"), bytes);
      const double px = static_cast<double>(img.shape().h) * img.shape().w;
      lines[i] = files[i].filename().string() + "," + std::to_string(img.shape().w) + "," +
                 std::to_string(img.shape().h) + "," + std::to_string(bytes.size()) + "," +
                 fixed(bytes.size() * 8.0 / px, 6) + "," + fixed(enc.estimated_bits() / px, 6);
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = files[i].string() + ": " + e.what();
    }
  });
  if (error) throw Exit{kFailure, *error};
  std::string log = "image,width,height,bytes,bpp,estimated_bpp\n";
  for (const auto& l : lines) {
    std::cout << l << '\n';
    log += l + '\n';
  }
  write_text(fs::path(common.out) / "compress_log.csv", log);
  return kOk;
}

int cmd_decompress(const Common& common, const std::vector<std::string>& inputs, const std::string& ckpt) {
  (void)resolve(common);
  const Codec model = load_model(ckpt);
  const auto files = expand_inputs(inputs, ".hflc");
  fs::create_directories(common.out);
  int code = kOk;
  NoGradGuard guard;
  for (const auto& f : files) {
    try {
      const auto bytes = read_file(f);
      const Bitstream bs = Bitstream::parse(bytes);
      const DecodeResult dec = decode_image(bs, model, true);
      if (dec.error) {
        std::cerr << f.string() << ": " << *dec.error << "; decoded " << dec.groups_complete << " of "
                  << bs.header.group_count() << " groups (payload " << dec.failed_payload.value_or(-1)
                  << " failed)\n";
        if (code == kOk) code = kCorruptPayload;
        continue;
      }
      write_png(fs::path(common.out) / (f.stem().string() + ".png"), dec.image);
      std::cout << f.filename().string() << "," << dec.image.shape().w << "," << dec.image.shape().h << '\n';
    } catch (const ModelMismatchError& e) {
      std::cerr << f.string() << ": " << e.what() << '\n';
      if (code == kOk) code = kModelMismatch;
    } catch (const DecodeError& e) {
      std::cerr << f.string() << ": " << e.what() << "; decoded 0 groups\n";
      if (code == kOk) code = kCorruptPayload;
    }
  }
  return code;
}

// ---- train -----------------------------------------------------------------------------

struct TrainFlags {
  std::string data;
  std::string detections;
  std::string phase;
  std::string init;
  std::optional<long> steps;
  std::optional<double> lambda;
  std::optional<int> batch_size;
  std::optional<int> crop;
  std::optional<int> epoch_divisor;
  std::optional<long> checkpoint_every;
};

int cmd_train(const Common& common, const TrainFlags& f) {
  RunConfig cfg = resolve(common);
  TrainConfig& t = cfg.train;
  if (!f.phase.empty()) t.phase = train_phase_from_string(f.phase);
  if (f.steps) t.max_steps = *f.steps;
  if (f.lambda) {
    if (t.phase == TrainPhase::kBase) t.lambda = *f.lambda;
    else t.weights.lambda_rate = *f.lambda;
  }
  if (f.batch_size) t.batch_size = *f.batch_size;
  if (f.crop) t.crop_size = *f.crop;
  if (f.epoch_divisor) t.schedule = desk_schedule(*f.epoch_divisor);
  if (f.checkpoint_every) t.checkpoint_every = *f.checkpoint_every;
  cfg.validate();

  std::vector<DetectionSet> det;
  if (!f.detections.empty()) det = load_detections(f.detections, t.masks.confidence_threshold);
  const Dataset data = Dataset::from_directory(f.data, det, t.masks);

  std::optional<Trainer> trainer;
  if (t.phase == TrainPhase::kPerceptual || !f.init.empty()) {
    if (f.init.empty()) throw Exit{kMissingCheckpoint, "perceptual training needs --init <base checkpoint>"};
    try {
      trainer.emplace(load_checkpoint(f.init), t);
    } catch (const IoError& e) {
      throw Exit{kMissingCheckpoint, "cannot read checkpoint: " + std::string(e.what())};
    }
  } else {
    trainer.emplace(Codec(cfg.codec), t);
  }
  fs::create_directories(common.out);
  write_text(fs::path(common.out) / "config.json", cfg.to_json() + "\n");
  std::ofstream log(fs::path(common.out) / "train_log.jsonl");
  const long total = trainer->total_steps(data);
  std::cerr << "training " << to_string(t.phase) << " on " << data.size() << " images for " << total
            << " steps\n";
  const auto records = trainer->run(data, &log, fs::path(common.out), [&](const StepRecord& r) {
    if (r.step == total || r.step % 50 == 0) {
      std::cerr << "step " << r.step << "/" << total << " loss " << r.loss << " bpp " << r.bpp << '\n';
    }
  });
  std::cout << (fs::path(common.out) / "final.hfck").string() << '\n';
  return kOk;
}

// ---- eval / bench / bdrate ----------------------------------------------------------------

std::vector<NamedImage> load_images(const std::string& dir) {
  std::vector<NamedImage> out;
  for (const auto& p : list_png_files(dir)) out.push_back({p.filename().string(), read_png(p)});
  if (out.empty()) throw Exit{kFailure, "no PNG images in " + dir};
  return out;
}

std::unique_ptr<FeatureExtractor> extractor_for(const std::string& kind) {
  if (kind == "none") return nullptr;
  return make_extractor(kind);
}

int cmd_eval(const Common& common, const std::vector<std::string>& ckpts, const std::string& data_dir,
             const std::string& label, const std::string& extractor) {
  RunConfig cfg = resolve(common);
  if (!extractor.empty()) cfg.eval.extractor = extractor;
  const auto images = load_images(data_dir);
  const auto fx = extractor_for(cfg.eval.extractor);
  std::vector<RDRow> rows;
  RDCurve curve;
  curve.label = label;
  for (const auto& ck : ckpts) {
    const Codec model = load_model(ck);
    const auto evals = evaluate_images(images, model, fx.get(), cfg.eval.workers);
    const std::string stem = fs::path(ck).stem().string();
    for (const auto& e : evals) rows.push_back({stem + ":" + e.id, e.point});
    curve.points.push_back(mean_point(evals));
  }
  std::sort(curve.points.begin(), curve.points.end(),
            [](const RDPoint& a, const RDPoint& b) { return a.bpp < b.bpp; });
  fs::create_directories(common.out);
  write_text(fs::path(common.out) / "images.csv", to_csv(rows));
  for (const auto& p : emit_rd_report({curve}, common.out)) std::cerr << "wrote " << p.string() << '\n';
  for (const auto& p : curve.points) {
    std::cout << "bpp " << fixed(p.bpp, 4) << " psnr " << fixed(p.psnr, 2) << " ms_ssim " << fixed(p.ms_ssim, 4)
              << " lpips_proxy " << fixed(p.lpips_proxy, 4) << '\n';
  }
  return kOk;
}

int cmd_bench(const Common& common, const std::string& ckpt, const std::string& data_dir,
              std::vector<int> groups, std::optional<int> repetitions) {
  const RunConfig cfg = resolve(common);
  if (groups.empty()) groups = cfg.eval.bench_groups;
  const int reps = repetitions.value_or(cfg.eval.repetitions);
  const Codec model = load_model(ckpt);
  std::vector<Tensor> images;
  if (!data_dir.empty()) {
    for (auto& n : load_images(data_dir)) images.push_back(std::move(n.image));
  } else {
    Rng rng(cfg.train.seed);
    for (int i = 0; i < 2; ++i) images.push_back(synthetic_image(128, 128, rng));
  }
  const auto rows = timing_bench(model, images, groups, reps);
  const std::string table = timing_table_markdown(rows);
  std::string csv = "config,groups,pass_count,repetitions,enc_ms,dec_ms,enc_mad_ms,dec_mad_ms\n";
  for (const auto& r : rows) {
    csv += r.config + "," + std::to_string(r.groups) + "," + std::to_string(r.pass_count) + "," +
           std::to_string(r.repetitions) + "," + fixed(r.enc_ms, 4) + "," + fixed(r.dec_ms, 4) + "," +
           fixed(r.enc_mad_ms, 4) + "," + fixed(r.dec_mad_ms, 4) + "\n";
  }
  fs::create_directories(common.out);
  write_text(fs::path(common.out) / "timing.md", table);
  write_text(fs::path(common.out) / "timing.csv", csv);
  std::cout << table;
  return kOk;
}

int cmd_bdrate(const std::string& a, const std::string& b, const std::string& quality) {
  const RDCurve anchor = load_curve(a);
  const RDCurve test = load_curve(b);
  const double v = bd_rate(anchor, test, quality_field_from_string(quality));
  std::cout << "BD-rate (" << quality << ") of '" << test.label << "' vs '" << anchor.label
            << "': " << fixed(std::abs(v) < 0.005 ? 0.0 : v, 2) << "%\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hflic: perceptual learned image codec"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hflic 1.0.0");

  Common common;
  std::string checkpoint;
  std::vector<std::string> inputs;

  auto* compress = app.add_subcommand("compress", "Encode PNG images into .hflc containers");
  add_common(compress, common);
  compress->add_option("inputs", inputs, "PNG files or directories")->required();
  compress->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();

  auto* decompress = app.add_subcommand("decompress", "Decode .hflc containers into PNG images");
  add_common(decompress, common);
  decompress->add_option("inputs", inputs, ".hflc files or directories")->required();
  decompress->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();

  TrainFlags tf;
  auto* train = app.add_subcommand("train", "Train a model");
  add_common(train, common);
  train->add_option("--data", tf.data, "Directory of PNG training images")->required();
  train->add_option("--detections", tf.detections, "Face detections JSON");
  train->add_option("--phase", tf.phase, "base or perceptual")->check(CLI::IsMember({"base", "perceptual"}));
  train->add_option("--init", tf.init, "Checkpoint to continue from");
  train->add_option("--steps", tf.steps, "Stop after this many steps");
  train->add_option("--lambda", tf.lambda, "Rate-distortion trade-off of the phase");
  train->add_option("--batch-size", tf.batch_size);
  train->add_option("--crop", tf.crop);
  train->add_option("--epoch-divisor", tf.epoch_divisor, "Desk schedule divisor");
  train->add_option("--checkpoint-every", tf.checkpoint_every);

  std::vector<std::string> ckpts;
  std::string data_dir, label = "hflic", extractor;
  auto* eval = app.add_subcommand("eval", "Rate-distortion evaluation");
  add_common(eval, common);
  eval->add_option("--checkpoint", ckpts, "One checkpoint per RD point")->required();
  eval->add_option("--data", data_dir, "Directory of PNG images")->required();
  eval->add_option("--label", label, "Curve label");
  eval->add_option("--extractor", extractor, "random, vgg16 or none");

  std::vector<int> groups;
  std::optional<int> reps;
  auto* bench = app.add_subcommand("bench", "Encode/decode timing for several group counts");
  add_common(bench, common);
  bench->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  bench->add_option("--data", data_dir, "Directory of PNG images (default: two synthetic 128x128)");
  bench->add_option("--groups", groups, "Group counts")->delimiter(',');
  bench->add_option("--repetitions", reps)->check(CLI::PositiveNumber);

  std::string csv_a, csv_b, quality = "psnr";
  auto* bdrate = app.add_subcommand("bdrate", "BD-rate of one RD curve CSV against another");
  bdrate->add_option("anchor", csv_a, "Anchor curve CSV")->required()->check(CLI::ExistingFile);
  bdrate->add_option("test", csv_b, "Test curve CSV")->required()->check(CLI::ExistingFile);
  bdrate->add_option("--quality", quality)->check(CLI::IsMember({"psnr", "ms_ssim", "lpips_proxy"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kFailure;
  }

  try {
    if (*compress) return cmd_compress(common, inputs, checkpoint);
    if (*decompress) return cmd_decompress(common, inputs, checkpoint);
    if (*train) return cmd_train(common, tf);
    if (*eval) return cmd_eval(common, ckpts, data_dir, label, extractor);
    if (*bench) return cmd_bench(common, checkpoint, data_dir, groups, reps);
    if (*bdrate) return cmd_bdrate(csv_a, csv_b, quality);
  } catch (const Exit& e) {
    std::cerr << "hflic: " << e.message << '\n';
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "hflic: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
