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

#include "hflic/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

#include "hflic/errors.hpp"

namespace hflic {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and rejects any key it was not asked for.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& dst) {
    known_.insert(key);
    if (!j_.contains(key)) return;
    try {
      dst = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + ": wrong type");
    }
  }

  const json* child(const char* key) {
    known_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!known_.count(key)) throw ConfigError("unknown config key '" + where(key) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> known_;
};

json schedule_json(const std::vector<Stage>& schedule) {
  json out = json::array();
  for (const Stage& s : schedule) out.push_back({{"epochs", s.epochs}, {"lr", s.lr}, {"warmup", s.warmup}});
  return out;
}

json train_json(const TrainConfig& t) {
  const LossWeights& w = t.weights;
  const MaskConfig& m = t.masks;
  return {{"phase", to_string(t.phase)},
          {"lambda", t.lambda},
          {"warmup_lambda", t.warmup_lambda},
          {"batch_size", t.batch_size},
          {"crop_size", t.crop_size},
          {"schedule", schedule_json(t.schedule)},
          {"seed", t.seed},
          {"max_steps", t.max_steps},
          {"grad_clip", t.grad_clip},
          {"adam", {{"beta1", t.adam.beta1}, {"beta2", t.adam.beta2}, {"eps", t.adam.eps}}},
          {"freeze_entropy", t.freeze_entropy},
          {"weights",
           {{"w_rec", w.w_rec},
            {"w_lpips", w.w_lpips},
            {"w_adv", w.w_adv},
            {"w_sty", w.w_sty},
            {"w_face", w.w_face},
            {"lambda_rate", w.lambda_rate}}},
          {"masks",
           {{"confidence_threshold", m.confidence_threshold},
            {"small_face_max_fraction", m.small_face_max_fraction},
            {"min_face_area", m.min_face_area},
            {"dilation_px", m.dilation_px},
            {"pyramid_levels", m.pyramid_levels}}},
          {"extractor", t.extractor},
          {"style_patch", t.style_patch},
          {"checkpoint_every", t.checkpoint_every}};
}

void read_train(const json& j, TrainConfig& t, const std::string& path) {
  Reader r(j, path);
  std::string phase = to_string(t.phase);
  r.get("phase", phase);
  t.phase = train_phase_from_string(phase);
  r.get("lambda", t.lambda);
  r.get("warmup_lambda", t.warmup_lambda);
  r.get("batch_size", t.batch_size);
  r.get("crop_size", t.crop_size);
  r.get("seed", t.seed);
  r.get("max_steps", t.max_steps);
  r.get("grad_clip", t.grad_clip);
  r.get("freeze_entropy", t.freeze_entropy);
  r.get("extractor", t.extractor);
  r.get("style_patch", t.style_patch);
  r.get("checkpoint_every", t.checkpoint_every);
  int divisor = 100;
  r.get("epoch_divisor", divisor);
  if (const json* s = r.child("schedule")) {
    if (s->is_string()) {
      const std::string name = s->get<std::string>();
      if (name == "desk") {
        t.schedule = desk_schedule(divisor);
      } else if (name == "paper") {
        t.schedule = paper_schedule();
      } else {
        throw ConfigError(r.where("schedule") + ": expected \"desk\", \"paper\" or a list of stages");
      }
    } else if (s->is_array()) {
      t.schedule.clear();
      for (std::size_t i = 0; i < s->size(); ++i) {
        Reader st((*s)[i], r.where("schedule[" + std::to_string(i) + "]"));
        Stage stage;
        st.get("epochs", stage.epochs);
        st.get("lr", stage.lr);
        st.get("warmup", stage.warmup);
        st.finish();
        t.schedule.push_back(stage);
      }
    } else {
      throw ConfigError(r.where("schedule") + ": wrong type");
    }
  } else if (j.contains("epoch_divisor")) {
    t.schedule = desk_schedule(divisor);
  }
  if (const json* a = r.child("adam")) {
    Reader ar(*a, r.where("adam"));
    ar.get("beta1", t.adam.beta1);
    ar.get("beta2", t.adam.beta2);
    ar.get("eps", t.adam.eps);
    ar.finish();
  }
  if (const json* w = r.child("weights")) {
    Reader wr(*w, r.where("weights"));
    wr.get("w_rec", t.weights.w_rec);
    wr.get("w_lpips", t.weights.w_lpips);
    wr.get("w_adv", t.weights.w_adv);
    wr.get("w_sty", t.weights.w_sty);
    wr.get("w_face", t.weights.w_face);
    wr.get("lambda_rate", t.weights.lambda_rate);
    wr.finish();
  }
  if (const json* m = r.child("masks")) {
    Reader mr(*m, r.where("masks"));
    mr.get("confidence_threshold", t.masks.confidence_threshold);
    mr.get("small_face_max_fraction", t.masks.small_face_max_fraction);
    mr.get("min_face_area", t.masks.min_face_area);
    mr.get("dilation_px", t.masks.dilation_px);
    mr.get("pyramid_levels", t.masks.pyramid_levels);
    mr.finish();
  }
  r.finish();
}

json parse_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
}

}  // namespace

void EvalConfig::validate() const {
  if (extractor.empty()) throw ConfigError("eval.extractor must not be empty");
  if (repetitions < 1) throw ConfigError("eval.repetitions must be >= 1");
  if (workers < 1) throw ConfigError("eval.workers must be >= 1");
  if (bench_groups.empty()) throw ConfigError("eval.bench_groups must not be empty");
  for (int g : bench_groups) {
    if (g != 5 && g != 10) throw ConfigError("eval.bench_groups entries must be 5 or 10");
  }
}

void RunConfig::validate() const {
  codec.validate();
  train.validate();
  eval.validate();
}

void RunConfig::set_seed(std::uint64_t seed) {
  codec.init_seed = seed;
  train.seed = seed;
}

std::string RunConfig::to_json() const {
  json j = json::parse(codec.to_json());
  j.erase("init_seed");
  j["seed"] = codec.init_seed;
  j["train"] = train_json(train);
  j["eval"] = {{"extractor", eval.extractor},
               {"repetitions", eval.repetitions},
               {"workers", eval.workers},
               {"bench_groups", eval.bench_groups}};
  return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text, const RunConfig& base, const std::string& source) {
  const json j = parse_text(text, source);
  RunConfig cfg = base;
  try {
    Reader r(j, "");
    std::uint64_t seed = cfg.codec.init_seed;
    r.get("seed", seed);
    if (j.contains("seed")) cfg.set_seed(seed);
    if (const json* t = r.child("transform")) {
      Reader tr(*t, "transform");
      TransformConfig& tc = cfg.codec.transform;
      tr.get("n_channels", tc.n_channels);
      tr.get("m_channels", tc.m_channels);
      tr.get("z_channels", tc.z_channels);
      tr.get("expansion_ratio", tc.expansion_ratio);
      tr.get("blocks_per_stage", tc.blocks_per_stage);
      tr.get("use_attention", tc.use_attention);
      std::string act(to_string(tc.activation));
      tr.get("activation", act);
      tc.activation = activation_from_string(act);
      tr.finish();
    }
    if (const json* e = r.child("entropy")) {
      Reader er(*e, "entropy");
      EntropyConfig& ec = cfg.codec.entropy;
      er.get("groups", ec.groups);
      er.get("sigma_min", ec.sigma_min);
      er.get("context_hidden", ec.context_hidden);
      er.get("mixture_components", ec.mixture_components);
      er.finish();
    }
    if (const json* t = r.child("train")) read_train(*t, cfg.train, "train");
    if (const json* e = r.child("eval")) {
      Reader er(*e, "eval");
      er.get("extractor", cfg.eval.extractor);
      er.get("repetitions", cfg.eval.repetitions);
      er.get("workers", cfg.eval.workers);
      er.get("bench_groups", cfg.eval.bench_groups);
      er.finish();
    }
    r.finish();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str(), base, path.string());
}

std::string train_config_to_json(const TrainConfig& cfg) { return train_json(cfg).dump(); }

TrainConfig train_config_from_json(const std::string& text, const TrainConfig& base) {
  TrainConfig t = base;
  read_train(parse_text(text, "train config"), t, "train");
  t.validate();
  return t;
}

}  // namespace hflic
