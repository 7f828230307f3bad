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
#include <string_view>
#include <vector>

#include "hflic/tensor.hpp"

namespace hflic {

struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double confidence = 1.0;

  double area() const { return (x1 - x0) * (y1 - y0); }
};

struct DetectionSet {
  std::string image_id;
  std::vector<Box> boxes;
};

struct MaskConfig {
  double confidence_threshold = 0.5;
  double small_face_max_fraction = 0.025;
  double min_face_area = 16.0;
  int dilation_px = 4;
  int pyramid_levels = 5;

  void validate() const;
};

// Detections JSON: one record {"image": name, "boxes": [[x0,y0,x1,y1,conf], ...]}
// or an array of such records. Boxes below `confidence_threshold` are dropped.
// Throws ParseError (with line:column) for malformed JSON or schema
// violations and ValidationError for impossible boxes.
std::vector<DetectionSet> parse_detections(std::string_view text, double confidence_threshold = 0.5,
                                           const std::string& source = "<string>");
std::vector<DetectionSet> load_detections(const std::filesystem::path& path,
                                          double confidence_threshold = 0.5);
// Empty set when `image_id` has no record.
DetectionSet find_detections(const std::vector<DetectionSet>& all, const std::string& image_id);

// Throws ValidationError for boxes outside the h x w image.
void validate_boxes(const DetectionSet& d, int h, int w);

// Keeps boxes with area / (h*w) <= max_fraction and area >= min_area.
DetectionSet select_small_faces(const DetectionSet& d, int h, int w, double max_fraction = 0.025,
                                double min_area = 16.0);

// face and perc are (1,1,H,W) binary maps with face + perc == 1. Pyramid
// level L is the average pool of the full-resolution map with window 2^L
// (level 0 is the map itself).
struct RegionMasks {
  Tensor face;
  Tensor perc;
  std::vector<Tensor> face_pyramid;
  std::vector<Tensor> perc_pyramid;
};

// Face mask is the union of boxes grown by `dilation_px` on every side:
// pixel columns floor(x0)-d .. ceil(x1)+d-1, clipped to the image.
RegionMasks rasterize(const DetectionSet& d, int h, int w, int dilation_px = 4,
                      int pyramid_levels = 5);

// Masks for one training/eval image: filter, select small faces, rasterize.
RegionMasks build_masks(const DetectionSet& d, int h, int w, const MaskConfig& cfg = {});

std::vector<Tensor> mask_pyramid(const Tensor& mask, int levels);

// Stacks per-image masks along the batch axis.
RegionMasks stack_masks(const std::vector<RegionMasks>& masks);

}  // namespace hflic
