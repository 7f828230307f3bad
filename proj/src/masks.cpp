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

#include "hflic/masks.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hflic/errors.hpp"

namespace hflic {

using nlohmann::json;

namespace {

std::string location(std::string_view text, std::size_t byte, const std::string& source) {
  byte = std::min(byte, text.size());
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return source + ":" + std::to_string(line) + ":" + std::to_string(col);
}

DetectionSet parse_record(const json& rec, double threshold, const std::string& where) {
  if (!rec.is_object()) throw ParseError(where + ": detection record must be an object");
  for (const auto& [key, _] : rec.items()) {
    if (key != "image" && key != "boxes") throw ParseError(where + ": unknown key '" + key + "'");
  }
  if (!rec.contains("image") || !rec["image"].is_string()) {
    throw ParseError(where + ": record needs a string 'image'");
  }
  if (!rec.contains("boxes") || !rec["boxes"].is_array()) {
    throw ParseError(where + ": record needs a 'boxes' array");
  }
  DetectionSet d;
  d.image_id = rec["image"].get<std::string>();
  for (const json& b : rec["boxes"]) {
    if (!b.is_array() || b.size() != 5 ||
        !std::all_of(b.begin(), b.end(), [](const json& v) { return v.is_number(); })) {
      throw ParseError(where + ": box in '" + d.image_id + "' must be [x0,y0,x1,y1,conf]");
    }
    Box box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>(),
            b[4].get<double>()};
    if (!(box.x0 >= 0 && box.y0 >= 0 && box.x1 > box.x0 && box.y1 > box.y0) ||
        !std::isfinite(box.x1) || !std::isfinite(box.y1)) {
      throw ValidationError(where + ": invalid box in '" + d.image_id + "'");
    }
    if (!(box.confidence >= 0.0 && box.confidence <= 1.0)) {
      throw ValidationError(where + ": confidence outside [0,1] in '" + d.image_id + "'");
    }
    if (box.confidence >= threshold) d.boxes.push_back(box);
  }
  return d;
}

}  // namespace

void MaskConfig::validate() const {
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
    throw ConfigError("masks: confidence_threshold must be in [0,1]");
  }
  if (!(small_face_max_fraction > 0.0 && small_face_max_fraction <= 1.0)) {
    throw ConfigError("masks: small_face_max_fraction must be in (0,1]");
  }
  if (min_face_area < 0.0) throw ConfigError("masks: min_face_area must be >= 0");
  if (dilation_px < 0) throw ConfigError("masks: dilation_px must be >= 0");
  if (pyramid_levels < 1) throw ConfigError("masks: pyramid_levels must be >= 1");
}

std::vector<DetectionSet> parse_detections(std::string_view text, double threshold,
                                           const std::string& source) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(location(text, e.byte == 0 ? 0 : e.byte - 1, source) + ": " + e.what());
  }
  std::vector<DetectionSet> out;
  if (doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      out.push_back(parse_record(doc[i], threshold, source + ": record " + std::to_string(i)));
    }
  } else {
    out.push_back(parse_record(doc, threshold, source));
  }
  return out;
}

std::vector<DetectionSet> load_detections(const std::filesystem::path& path, double threshold) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open detections file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_detections(ss.str(), threshold, path.string());
}

DetectionSet find_detections(const std::vector<DetectionSet>& all, const std::string& image_id) {
  for (const auto& d : all) {
    if (d.image_id == image_id) return d;
  }
  return DetectionSet{image_id, {}};
}

void validate_boxes(const DetectionSet& d, int h, int w) {
  for (const Box& b : d.boxes) {
    if (b.x0 < 0 || b.y0 < 0 || b.x1 > w || b.y1 > h || b.x1 <= b.x0 || b.y1 <= b.y0) {
      throw ValidationError("box outside " + std::to_string(w) + "x" + std::to_string(h) +
                            " image '" + d.image_id + "'");
    }
  }
}

DetectionSet select_small_faces(const DetectionSet& d, int h, int w, double max_fraction,
                                double min_area) {
  validate_boxes(d, h, w);
  DetectionSet out{d.image_id, {}};
  const double image_area = static_cast<double>(h) * w;
  for (const Box& b : d.boxes) {
    if (b.area() / image_area <= max_fraction && b.area() >= min_area) out.boxes.push_back(b);
  }
  return out;
}

std::vector<Tensor> mask_pyramid(const Tensor& mask, int levels) {
  std::vector<Tensor> out{mask};
  for (int l = 1; l < levels; ++l) {
    const Tensor& prev = out.back();
    const Shape s = prev.shape();
    Tensor next(Shape{s.n, s.c, s.h / 2, s.w / 2});
    const Shape t = next.shape();
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c)
        for (int i = 0; i < t.h; ++i)
          for (int j = 0; j < t.w; ++j) {
            next.at(n, c, i, j) = 0.25 * (prev.at(n, c, 2 * i, 2 * j) + prev.at(n, c, 2 * i, 2 * j + 1) +
                                          prev.at(n, c, 2 * i + 1, 2 * j) +
                                          prev.at(n, c, 2 * i + 1, 2 * j + 1));
          }
    out.push_back(std::move(next));
  }
  return out;
}

RegionMasks rasterize(const DetectionSet& d, int h, int w, int dilation_px, int levels) {
  RegionMasks m;
  m.face = Tensor(Shape{1, 1, h, w});
  for (const Box& b : d.boxes) {
    const int x0 = std::max(0, static_cast<int>(std::floor(b.x0)) - dilation_px);
    const int y0 = std::max(0, static_cast<int>(std::floor(b.y0)) - dilation_px);
    const int x1 = std::min(w, static_cast<int>(std::ceil(b.x1)) + dilation_px);
    const int y1 = std::min(h, static_cast<int>(std::ceil(b.y1)) + dilation_px);
    for (int i = y0; i < y1; ++i)
      for (int j = x0; j < x1; ++j) m.face.at(0, 0, i, j) = 1.0;
  }
  m.perc = Tensor(m.face.shape());
  for (std::size_t i = 0; i < m.face.numel(); ++i) m.perc.values()[i] = 1.0 - m.face.values()[i];
  m.face_pyramid = mask_pyramid(m.face, levels);
  m.perc_pyramid = mask_pyramid(m.perc, levels);
  return m;
}

RegionMasks build_masks(const DetectionSet& d, int h, int w, const MaskConfig& cfg) {
  cfg.validate();
  DetectionSet kept{d.image_id, {}};
  for (const Box& b : d.boxes) {
    if (b.confidence >= cfg.confidence_threshold) kept.boxes.push_back(b);
  }
  return rasterize(select_small_faces(kept, h, w, cfg.small_face_max_fraction, cfg.min_face_area), h,
                   w, cfg.dilation_px, cfg.pyramid_levels);
}

RegionMasks stack_masks(const std::vector<RegionMasks>& masks) {
  if (masks.empty()) throw ConfigError("stack_masks: no masks");
  auto stack = [&](auto get) {
    std::vector<Tensor> parts;
    for (const auto& m : masks) parts.push_back(get(m));
    return concat_batch(parts);
  };
  RegionMasks out;
  out.face = stack([](const RegionMasks& m) { return m.face; });
  out.perc = stack([](const RegionMasks& m) { return m.perc; });
  for (std::size_t l = 0; l < masks.front().face_pyramid.size(); ++l) {
    out.face_pyramid.push_back(stack([l](const RegionMasks& m) { return m.face_pyramid[l]; }));
    out.perc_pyramid.push_back(stack([l](const RegionMasks& m) { return m.perc_pyramid[l]; }));
  }
  return out;
}

}  // namespace hflic
