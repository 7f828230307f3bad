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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "hflic/errors.hpp"
#include "hflic/masks.hpp"
#include "hflic/rng.hpp"

namespace hflic {
namespace {

double total(const Tensor& t) { return t.sum(); }

TEST(Detections, ParsesSingleRecord) {
  const auto d = parse_detections(R"({"image": "a.png", "boxes": [[10,10,50,50,0.9]]})");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].image_id, "a.png");
  ASSERT_EQ(d[0].boxes.size(), 1u);
  EXPECT_EQ(d[0].boxes[0].x1, 50.0);
}

TEST(Detections, ThresholdAndArrays) {
  const auto d = parse_detections(
      R"([{"image": "a", "boxes": [[0,0,4,4,0.49],[0,0,4,4,0.5]]}, {"image": "b", "boxes": []}])");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].boxes.size(), 1u);
  EXPECT_TRUE(d[1].boxes.empty());
  EXPECT_TRUE(find_detections(d, "missing").boxes.empty());
  EXPECT_EQ(find_detections(d, "a").boxes.size(), 1u);
}

TEST(Detections, Errors) {
  EXPECT_THROW(parse_detections(R"({"image": "a", "boxes": [[50,10,50,40,0.9]]})"), ValidationError);
  EXPECT_THROW(parse_detections(R"({"image": "a", "boxes": [[1,2,3,4,1.5]]})"), ValidationError);
  EXPECT_THROW(parse_detections(R"({"image": "a", "boxes": [[1,2,3]]})"), ParseError);
  EXPECT_THROW(parse_detections(R"({"image": "a", "boxes": [], "extra": 1})"), ParseError);
  try {
    parse_detections("{\n  \"image\": \"a\",\n  \"boxes\": [[1,2,3,4,0.9],]\n}", 0.5, "det.json");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("det.json:3:"), std::string::npos) << e.what();
  }
}

TEST(Detections, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "hflic_masks_test.json";
  std::ofstream(path) << R"({"image": "x", "boxes": [[10,10,50,50,0.9]]})";
  EXPECT_EQ(load_detections(path).at(0).boxes.size(), 1u);
  std::filesystem::remove(path);
  EXPECT_THROW(load_detections(path), IoError);
}

TEST(SmallFaces, Thresholds) {
  DetectionSet d{"x", {{100, 100, 140, 140, 1}, {0, 0, 300, 300, 1}, {5, 5, 8, 8, 1}}};
  const DetectionSet kept = select_small_faces(d, 512, 512);
  ASSERT_EQ(kept.boxes.size(), 1u);
  EXPECT_EQ(kept.boxes[0].x0, 100.0);
  EXPECT_THROW(select_small_faces(DetectionSet{"x", {{0, 0, 600, 10, 1}}}, 512, 512), ValidationError);
}

TEST(SmallFaces, KeptCountMonotoneInThreshold) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    DetectionSet d{"x", {}};
    for (int k = 0; k < 30; ++k) {
      const double x0 = rng.uniform(0, 200), y0 = rng.uniform(0, 200);
      d.boxes.push_back({x0, y0, x0 + rng.uniform(1, 56), y0 + rng.uniform(1, 56), 1.0});
    }
    std::size_t prev = d.boxes.size();
    for (double frac = 0.05; frac > 1e-4; frac *= 0.7) {
      const std::size_t n = select_small_faces(d, 256, 256, frac).boxes.size();
      EXPECT_LE(n, prev);
      prev = n;
    }
  }
}

TEST(Rasterize, EmptyAndFull) {
  const RegionMasks none = rasterize({}, 32, 48);
  EXPECT_EQ(total(none.face), 0.0);
  EXPECT_EQ(total(none.perc), 32.0 * 48.0);
  const RegionMasks full = rasterize(DetectionSet{"x", {{0, 0, 48, 32, 1}}}, 32, 48);
  EXPECT_EQ(total(full.face), 32.0 * 48.0);
  EXPECT_EQ(total(full.perc), 0.0);
}

TEST(Rasterize, PyramidMassForInteriorBox) {
  const RegionMasks m = rasterize(DetectionSet{"x", {{48, 48, 80, 80, 1}}}, 128, 128, 4, 5);
  ASSERT_EQ(m.face_pyramid.size(), 5u);
  EXPECT_EQ(m.face_pyramid[2].shape(), (Shape{1, 1, 32, 32}));
  EXPECT_DOUBLE_EQ(total(m.face_pyramid[2]), 100.0);
  const double mean0 = total(m.face) / m.face.numel();
  for (const Tensor& level : m.face_pyramid) {
    EXPECT_NEAR(total(level) / level.numel(), mean0, 1e-6);
  }
}

TEST(Rasterize, PartitionAndIdempotence) {
  Rng rng(5);
  DetectionSet d{"x", {}};
  for (int k = 0; k < 6; ++k) {
    const double x0 = rng.uniform(0, 50), y0 = rng.uniform(0, 50);
    d.boxes.push_back({x0, y0, x0 + rng.uniform(1, 14), y0 + rng.uniform(1, 14), 1.0});
  }
  const RegionMasks a = rasterize(d, 64, 64), b = rasterize(d, 64, 64);
  for (std::size_t i = 0; i < a.face.numel(); ++i) {
    const double f = a.face.values()[i], p = a.perc.values()[i];
    ASSERT_TRUE((f == 1.0 && p == 0.0) || (f == 0.0 && p == 1.0));
    ASSERT_EQ(f, b.face.values()[i]);
  }
  for (std::size_t l = 0; l < a.face_pyramid.size(); ++l)
    for (std::size_t i = 0; i < a.face_pyramid[l].numel(); ++i)
      ASSERT_EQ(a.face_pyramid[l].values()[i] + a.perc_pyramid[l].values()[i], 1.0);
}

TEST(Rasterize, DilationClipsAtBorder) {
  const RegionMasks m = rasterize(DetectionSet{"x", {{0, 0, 2, 2, 1}}}, 16, 16, 4);
  EXPECT_EQ(total(m.face), 36.0);
}

TEST(BuildMasks, StacksAlongBatch) {
  MaskConfig cfg;
  const RegionMasks a = build_masks(DetectionSet{"a", {{8, 8, 16, 16, 0.9}}}, 64, 64, cfg);
  const RegionMasks b = build_masks(DetectionSet{"b", {{8, 8, 16, 16, 0.1}}}, 64, 64, cfg);
  EXPECT_GT(total(a.face), 0.0);
  EXPECT_EQ(total(b.face), 0.0);
  const RegionMasks s = stack_masks({a, b});
  EXPECT_EQ(s.face.shape(), (Shape{2, 1, 64, 64}));
  EXPECT_EQ(s.perc_pyramid[4].shape(), (Shape{2, 1, 4, 4}));
}

}  // namespace
}  // namespace hflic
