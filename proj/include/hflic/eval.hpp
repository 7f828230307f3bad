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

#include "hflic/losses.hpp"
#include "hflic/model.hpp"
#include "hflic/tensor.hpp"

namespace hflic {

// 10 log10(1 / MSE) for images in [0,1]; +infinity when the images match.
double psnr(const Tensor& x, const Tensor& x_hat);
// Mean single-scale SSIM (11x11 Gaussian window, sigma 1.5, valid filtering).
double ssim(const Tensor& x, const Tensor& x_hat);
// Five-scale MS-SSIM with the usual exponents. Scales smaller than the
// window use a window as wide as the scale.
double ms_ssim(const Tensor& x, const Tensor& x_hat);
// Feature distance under `fx` on the top-left crop to a multiple of 16;
// reported as a proxy, not as published LPIPS.
double lpips_proxy(const Tensor& x, const Tensor& x_hat, const FeatureExtractor& fx);

struct RDPoint {
  double bpp = 0.0;
  double psnr = 0.0;
  double ms_ssim = 0.0;
  double lpips_proxy = 0.0;
  double enc_ms = 0.0;
  double dec_ms = 0.0;

  friend bool operator==(const RDPoint&, const RDPoint&) = default;
};

struct RDCurve {
  std::string label;
  std::vector<RDPoint> points;

  // Throws ValidationError unless bpp > 0 and strictly increasing.
  void validate() const;
  friend bool operator==(const RDCurve&, const RDCurve&) = default;
};

enum class QualityField { kPsnr, kMsSsim, kLpipsProxy };

std::string to_string(QualityField f);
QualityField quality_field_from_string(const std::string& s);
// Higher is better; lpips_proxy is negated.
double quality_of(const RDPoint& p, QualityField f);
// False when quality drops somewhere as bpp grows.
bool quality_monotone(const RDCurve& c, QualityField f);

// Average rate difference of `test` against `anchor` at equal quality, in
// percent. ln(rate) is fitted by a cubic in quality for each curve and the
// fits are integrated over the common quality interval. Throws
// ValidationError for fewer than four points or disjoint quality ranges.
double bd_rate(const RDCurve& anchor, const RDCurve& test, QualityField f = QualityField::kPsnr);

// Least-squares polynomial coefficients, lowest order first.
std::vector<double> polyfit(const std::vector<double>& x, const std::vector<double>& y, int degree);
double polyval(const std::vector<double>& coef, double x);

// ---- per-image evaluation ------------------------------------------------------

struct ImageEval {
  std::string id;
  int width = 0;
  int height = 0;
  RDPoint point;
};

// Compresses and decompresses `image`; bpp counts every byte of the
// container and the metrics compare against the 8-bit decoded image.
RDPoint evaluate_image(const Tensor& image, const Codec& model, const FeatureExtractor* fx);

struct NamedImage {
  std::string id;
  Tensor image;
};

std::vector<ImageEval> evaluate_images(const std::vector<NamedImage>& images, const Codec& model,
                                       const FeatureExtractor* fx, int workers = 1);
// Mean of every field.
RDPoint mean_point(const std::vector<ImageEval>& evals);

// ---- timing ----------------------------------------------------------------------

struct TimingRow {
  std::string config;
  int groups = 0;
  int pass_count = 0;       // sequential entropy-decoding passes per image
  int repetitions = 0;
  double enc_ms = 0.0;      // medians over repetitions of the whole image set
  double dec_ms = 0.0;
  double enc_mad_ms = 0.0;  // median absolute deviation
  double dec_mad_ms = 0.0;
};

// 5 groups: the default partition; 10: the ten-group partition; otherwise
// near-equal groups.
GroupPartition partition_for_count(int m, int groups);

// Builds one codec per group count from `model` (same transforms and width)
// and times single-threaded encode and decode after a warm-up run.
std::vector<TimingRow> timing_bench(const Codec& model, const std::vector<Tensor>& images,
                                    const std::vector<int>& group_counts, int repetitions = 10);

std::string timing_table_markdown(const std::vector<TimingRow>& rows);

// ---- CSV and reports -------------------------------------------------------------

inline constexpr char kRdCsvHeader[] = "label,bpp,psnr,ms_ssim,lpips_proxy,enc_ms,dec_ms";

struct RDRow {
  std::string label;
  RDPoint point;

  friend bool operator==(const RDRow&, const RDRow&) = default;
};

std::string to_csv(const std::vector<RDRow>& rows);
std::string to_csv(const RDCurve& curve);
// Throws ParseError with `source:line` for malformed input.
std::vector<RDRow> parse_rd_csv(const std::string& text, const std::string& source = "<csv>");
// Every row must carry the same label.
RDCurve curve_from_rows(const std::vector<RDRow>& rows);
RDCurve load_curve(const std::filesystem::path& path);

// Writes <label>.csv per curve, rd_psnr.svg and summary.md into `out_dir`
// and returns the written paths. Throws ValidationError for no curves.
std::vector<std::filesystem::path> emit_rd_report(const std::vector<RDCurve>& curves,
                                                  const std::filesystem::path& out_dir);

std::string render_rd_svg(const std::vector<RDCurve>& curves, QualityField f = QualityField::kPsnr);

}  // namespace hflic
