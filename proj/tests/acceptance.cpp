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

// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fail.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include "hflic/bitstream.hpp"
#include "hflic/errors.hpp"
#include "hflic/eval.hpp"
#include "hflic/losses.hpp"
#include "hflic/masks.hpp"
#include "hflic/synthetic.hpp"
#include "hflic/training.hpp"
#include "hflic/transforms.hpp"
#include "test_util.hpp"

namespace hflic {
namespace {

using testing::check_gradient;
using testing::random_image;

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  return std::equal(a.values().begin(), a.values().end(), b.values().begin());
}

double mse(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double e = a.values()[i] - b.values()[i];
    s += e * e;
  }
  return s / static_cast<double>(a.numel());
}

Var constant(Shape s, double v) {
  Tensor t(s);
  t.fill(v);
  return Var::constant(t);
}

Tensor ones(Shape s) {
  Tensor t(s);
  t.fill(1.0);
  return t;
}

class IdentityExtractor : public FeatureExtractor {
 public:
  std::vector<Var> features(const Var& x) const override { return {x}; }
  std::vector<int> tap_levels() const override { return {0}; }
  std::string name() const override { return "identity"; }
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---- 1 and 2 -------------------------------------------------------------------

struct RoundTripStats {
  int images = 0;
  int exact = 0;
  int rate_ok = 0;
  double worst_rate_excess = -1e300;  // |actual - est| - (0.01 est + 256), max over images
  double cpu = 0.0;
};

RoundTripStats round_trip_stats() {
  static const RoundTripStats stats = [] {
    RoundTripStats s;
    const double t0 = cpu_seconds();
    const Codec model{CodecConfig{}};
    Rng rng(1001);
    for (int k = 0; k < 50; ++k) {
      const Tensor x = random_image(rng, 128, 128);
      const EncodeResult enc = encode_image(x, model);
      const DecodeResult dec = decode_image(Bitstream::parse(enc.bitstream.serialize()), model);
      ++s.images;
      s.exact += bitwise_equal(dec.y_hat, enc.y_hat) && bitwise_equal(dec.z_hat, enc.z_hat) &&
                 bitwise_equal(dec.image, enc.reconstruction);
      const double actual = 8.0 * static_cast<double>(enc.bitstream.payload_bytes());
      const double est = enc.estimated_bits();
      const double excess = std::abs(actual - est) - (0.01 * est + 256.0);
      s.rate_ok += excess <= 0.0;
      s.worst_rate_excess = std::max(s.worst_rate_excess, excess);
    }
    s.cpu = cpu_seconds() - t0;
    return s;
  }();
  return stats;
}

Outcome criterion1() {
  const RoundTripStats s = round_trip_stats();
  char buf[160];
  std::snprintf(buf, sizeof buf, "codec round trip: %d/%d images bitwise equal, cpu %.1f s (limit 300 s)", s.exact,
                s.images, s.cpu);
  return {s.exact == 50 && s.cpu < 300.0, buf};
}

Outcome criterion2() {
  const RoundTripStats s = round_trip_stats();
  char buf[160];
  std::snprintf(buf, sizeof buf, "rate fidelity: %d/%d images within 1%% + 256 bits (worst margin %.1f bits)",
                s.rate_ok, s.images, -s.worst_rate_excess);
  return {s.rate_ok == s.images && s.images == 50, buf};
}

// ---- 3 ----------------------------------------------------------------------------

Outcome criterion3() {
  const Codec model{CodecConfig{}};
  const ContextModel& ctx = model.context();
  const GroupPartition& part = model.partition();
  const int m = part.total(), h = 8, w = 8;
  Rng rng(303);
  const Var hyper = Var::constant(rng.normal_tensor(Shape{1, 2 * m, h, w}, 0, 1));
  auto params_of = [&](const Tensor& y, int g, CheckerboardPhase ph) {
    NoGradGuard guard;
    const GaussianParams p = ctx.params(hyper, Var::constant(y), g, ph);
    return concat_channels(std::vector<Tensor>{p.mu.value(), p.sigma.value()});
  };
  auto is_future = [&](int c, int i, int j, int g, CheckerboardPhase ph) {
    const int off = part.offset(g);
    if (c >= off + part.size(g)) return true;
    if (c < off) return false;
    return ph == CheckerboardPhase::kAnchor || !is_anchor(i, j);
  };
  int trials = 0, invariant = 0;
  for (int g = 0; g < part.count(); ++g) {
    for (auto ph : {CheckerboardPhase::kAnchor, CheckerboardPhase::kNonAnchor}) {
      const Tensor base = rng.normal_tensor(Shape{1, m, h, w}, 0, 3);
      const Tensor ref = params_of(base, g, ph);
      for (int t = 0; t < 20; ++t) {
        Tensor y = base;
        for (int c = 0; c < m; ++c)
          for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j)
              if (is_future(c, i, j, g, ph)) y.at(0, c, i, j) = rng.normal(0, 50);
        ++trials;
        invariant += bitwise_equal(params_of(y, g, ph), ref);
      }
    }
  }
  const EncodeResult enc = encode_image(random_image(rng, 128, 128), model);
  int corrupt_ok = 0;
  for (int g = 0; g < part.count(); ++g) {
    Bitstream bs = enc.bitstream;
    auto& payload = bs.payloads[payload_index(g, CheckerboardPhase::kAnchor)];
    if (payload.empty()) continue;
    payload[payload.size() / 2] ^= 0x5A;
    const DecodeResult dec = decode_image(bs, model, true);
    bool same = dec.groups_complete == g;
    for (int c = 0; c < part.offset(g) && same; ++c)
      for (std::size_t i = 0; i < dec.y_hat.shape().plane(); ++i)
        same = same && dec.y_hat.plane(0, c)[i] == enc.y_hat.plane(0, c)[i];
    corrupt_ok += same;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "causality: %d/%d perturbation trials invariant, %d/%d corrupted groups isolated",
                invariant, trials, corrupt_ok, part.count());
  return {trials == 20 * 2 * part.count() && invariant == trials && corrupt_ok == part.count(), buf};
}

// ---- 4 ----------------------------------------------------------------------------

Outcome criterion4() {
  constexpr double kTol = 1e-6;
  struct Check {
    const char* name;
    double got, want;
  };
  std::vector<Check> checks;
  const Shape s{1, 3, 8, 8}, px{1, 1, 1, 1};
  Rng rng(404);
  const Var a = Var::constant(rng.uniform_tensor(s, 0, 1)), b = Var::constant(rng.uniform_tensor(s, 0, 1));

  checks.push_back({"charbonnier x==x_hat", charbonnier(a, a, 1e-3).item(), 1e-3});
  checks.push_back({"charbonnier diff 3 eps 0", charbonnier(constant(px, 3.0), constant(px, 0.0), 0.0).item(), 3.0});
  checks.push_back({"charbonnier diff 4 eps 3", charbonnier(constant(px, 4.0), constant(px, 0.0), 3.0).item(), 5.0});

  checks.push_back({"masked_mse ones", masked_mse(a, b, ones(Shape{1, 1, 8, 8})).item(), mean(square(a - b)).item()});
  checks.push_back({"masked_mse zeros", masked_mse(a, b, Tensor(Shape{1, 1, 8, 8})).item(), 0.0});
  Tensor x2(Shape{1, 3, 2, 2}), m2(Shape{1, 1, 2, 2});
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 2; ++i) x2.at(0, c, i, 0) = 2.0;
  m2.at(0, 0, 0, 0) = m2.at(0, 0, 1, 0) = 1.0;
  checks.push_back({"masked_mse left half", masked_mse(Var::constant(x2), constant(x2.shape(), 0.0), m2).item(), 4.0});

  const RandomConvExtractor fx;
  const Shape big{1, 3, 32, 32};
  const Var c = Var::constant(rng.uniform_tensor(big, 0, 1)), d = Var::constant(rng.uniform_tensor(big, 0, 1));
  const std::vector<Tensor> full = mask_pyramid(ones(Shape{1, 1, 32, 32}), 5);
  checks.push_back({"feature_perceptual self", feature_perceptual(c, c, fx).item(), 0.0});
  checks.push_back({"feature_perceptual ones mask", feature_perceptual(c, d, fx, &full).item(),
                    feature_perceptual(c, d, fx).item()});
  checks.push_back({"feature_perceptual symmetry", feature_perceptual(c, d, fx).item(),
                    feature_perceptual(d, c, fx).item()});

  checks.push_back({"style self", style_loss(c, c, fx).item(), 0.0});
  const IdentityExtractor id;
  const double va = 0.7, vb = 0.2;
  const Shape one{1, 1, 16, 16};
  checks.push_back({"style constant maps", style_loss(constant(one, va), constant(one, vb), id, 16).item(),
                    (va * va - vb * vb) * (va * va - vb * vb)});
  Tensor p = rng.uniform_tensor(Shape{1, 3, 8, 8}, 0, 1), q = p;
  for (int ch = 0; ch < 3; ++ch) {
    std::swap(q.at(0, ch, 0, 0), q.at(0, ch, 3, 2));
    std::swap(q.at(0, ch, 1, 1), q.at(0, ch, 2, 3));
  }
  checks.push_back({"style window permutation", style_loss(Var::constant(p), Var::constant(q), id, 4).item(), 0.0});

  Rng drng(405);
  Discriminator disc(48, drng);
  const Var img = Var::constant(rng.uniform_tensor(Shape{1, 3, 64, 64}, 0, 1));
  const Var lat = Var::constant(rng.normal_tensor(Shape{1, 48, 4, 4}, 0, 1));
  const Var logits = disc.forward(img, lat);
  checks.push_back({"discriminator logits 1x4x4", logits.shape() == Shape{1, 1, 4, 4} ? 0.0 : 1.0, 0.0});
  checks.push_back({"discriminator determinism",
                    bitwise_equal(disc.forward(img, lat).value(), logits.value()) ? 0.0 : 1.0, 0.0});

  const Shape ls{1, 1, 4, 4};
  checks.push_back({"hinge_d(+1,-1)", hinge_d(constant(ls, 1.0), constant(ls, -1.0)).item(), 0.0});
  checks.push_back({"hinge_d(0,0)", hinge_d(constant(ls, 0.0), constant(ls, 0.0)).item(), 2.0});
  checks.push_back({"hinge_g(0)", hinge_g(constant(ls, 0.0)).item(), 0.0});

  const Shape is{1, 3, 64, 64};
  LossInputs in;
  in.x = Var::constant(rng.uniform_tensor(is, 0, 1));
  in.x_hat = Var::constant(rng.uniform_tensor(is, 0, 1));
  in.bits = Var::constant(Tensor(Shape{1, 1, 1, 1}, {2048.0}));
  const RegionMasks empty = build_masks(DetectionSet{}, 64, 64);
  in.masks = &empty;
  LossWeights no_face;
  no_face.w_face = 0.0;
  const LossResult perc = total_loss(in, no_face, &fx);
  checks.push_back({"total w_face=0 empty mask", perc.weighted.total,
                    perc.weighted.rec + perc.weighted.lpips + perc.weighted.sty + perc.weighted.rate});
  LossWeights rate_only{0, 0, 0, 0, 0, 0.1};
  checks.push_back({"total rate only", total_loss(in, rate_only, &fx).weighted.total, 0.1 * 2048.0 / (64 * 64)});
  LossWeights doubled;
  doubled.w_rec *= 2.0;
  const LossResult base = total_loss(in, LossWeights{}, &fx), twice = total_loss(in, doubled, &fx);
  checks.push_back({"total linearity in w_rec", twice.weighted.total - base.weighted.total, base.weighted.rec});
  checks.push_back({"total linearity other terms",
                    std::abs(twice.weighted.lpips - base.weighted.lpips) + std::abs(twice.weighted.sty - base.weighted.sty) +
                        std::abs(twice.weighted.face - base.weighted.face) +
                        std::abs(twice.weighted.rate - base.weighted.rate),
                    0.0});

  int ok = 0;
  double worst = 0.0;
  std::string failed;
  for (const auto& ch : checks) {
    const double err = std::abs(ch.got - ch.want);
    worst = std::max(worst, err);
    if (err <= kTol) {
      ++ok;
    } else {
      failed += std::string(" [") + ch.name + "]";
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "loss identities: %d/%zu within 1e-6 (worst %.2e)", ok, checks.size(), worst);
  return {ok == static_cast<int>(checks.size()), buf + failed};
}

// ---- 5 ----------------------------------------------------------------------------

Outcome criterion5() {
  Rng rng(505);
  const Shape s{1, 3, 4, 4};
  const Tensor x = rng.uniform_tensor(s, 0, 1);
  const Tensor x_hat = rng.uniform_tensor(s, 0, 1);
  Tensor mask(Shape{1, 1, 4, 4});
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 2; ++j) mask.at(0, 0, i, j) = 1.0;
  const RandomConvExtractor tiny(RandomExtractorConfig{{4, 5}, 77});
  const std::vector<Tensor> pyramid = mask_pyramid(mask, 2);
  const Var xv = Var::constant(x);
  const std::vector<std::pair<const char*, std::function<Var(const Var&)>>> fns{
      {"charbonnier", [&](const Var& v) { return charbonnier(xv, v); }},
      {"charbonnier masked", [&](const Var& v) { return charbonnier(xv, v, mask); }},
      {"masked_mse", [&](const Var& v) { return masked_mse(xv, v, mask); }},
      {"style_loss", [&](const Var& v) { return style_loss(xv, v, tiny, 16); }},
      {"style_loss masked", [&](const Var& v) { return style_loss(xv, v, tiny, 2, &pyramid); }},
      {"feature_perceptual", [&](const Var& v) { return feature_perceptual(xv, v, tiny); }},
      {"feature_perceptual masked", [&](const Var& v) { return feature_perceptual(xv, v, tiny, &pyramid); }},
  };
  double worst = 0.0;
  std::string failed;
  for (const auto& [name, f] : fns) {
    const double e = check_gradient(x_hat, f);
    worst = std::max(worst, e);
    if (!(e < 1e-4)) failed += std::string(" [") + name + "]";
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "gradient checks: %zu losses on 4x4, worst relative error %.2e (limit 1e-4)",
                fns.size(), worst);
  return {failed.empty(), buf + failed};
}

// ---- 6 ----------------------------------------------------------------------------

struct RdResult {
  double mse = 0.0;
  double bpp = 0.0;
};

RdResult train_and_measure(double lambda, const Dataset& data, const std::vector<Tensor>& held) {
  TrainConfig cfg;
  cfg.schedule = {{100000, 1e-3, false}};
  cfg.max_steps = 500;
  cfg.lambda = lambda;
  Trainer trainer(Codec(CodecConfig{}), cfg);
  trainer.run(data);
  RdResult r;
  for (const Tensor& x : held) {
    const EncodeResult enc = encode_image(x, trainer.model());
    r.mse += mse(x, enc.reconstruction) / static_cast<double>(held.size());
    r.bpp += 8.0 * static_cast<double>(enc.bitstream.payload_bytes()) /
             static_cast<double>(x.shape().h * x.shape().w) / static_cast<double>(held.size());
  }
  return r;
}

Outcome criterion6() {
  const double t0 = cpu_seconds();

  Rng rng(606);
  Dataset smoke;
  for (int i = 0; i < 8; ++i) smoke.add("crop" + std::to_string(i), synthetic_image(64, 64, rng));
  TrainConfig cfg;
  cfg.schedule = {{100000, 1e-4, false}};
  cfg.max_steps = 200;
  cfg.lambda = 0.015;
  Trainer trainer(Codec(CodecConfig{}), cfg);
  const std::vector<StepRecord> log = trainer.run(smoke);
  auto window_mean = [&](std::size_t from) {
    double s = 0.0;
    for (std::size_t i = from; i < from + 20; ++i) s += log[i].loss;
    return s / 20.0;
  };
  const double first = window_mean(0), last = window_mean(log.size() - 20);

  Rng drng(42);
  Dataset data;
  for (int i = 0; i < 32; ++i) data.add("crop" + std::to_string(i), synthetic_image(64, 64, drng));
  std::vector<Tensor> held;
  for (int i = 0; i < 4; ++i) held.push_back(synthetic_image(64, 64, drng));
  const RdResult low = train_and_measure(8e-4, data, held);
  const RdResult high = train_and_measure(75e-4, data, held);
  const double cpu = cpu_seconds() - t0;

  char buf[320];
  std::snprintf(buf, sizeof buf,
                "training smoke: %zu steps, smoothed loss %.4g -> %.4g; lambda 8e-4 mse %.5f bpp %.3f, "
                "lambda 75e-4 mse %.5f bpp %.3f; cpu %.0f s (limit 1200 s)",
                log.size(), first, last, low.mse, low.bpp, high.mse, high.bpp, cpu);
  const bool ok = log.size() == 200 && last < first && high.mse < low.mse && high.bpp > low.bpp && cpu < 1200.0;
  return {ok, buf};
}

// ---- 7 ----------------------------------------------------------------------------

Outcome criterion7() {
  Rng rng(707);
  const RandomConvExtractor fx;
  const Shape s{1, 3, 64, 64};
  LossInputs in;
  in.x = Var::constant(rng.uniform_tensor(s, 0, 1));
  in.x_hat = Var::constant(rng.uniform_tensor(s, 0, 1));
  in.bits = Var::constant(Tensor(Shape{1, 1, 1, 1}, {2048.0}));
  const RegionMasks with_box = build_masks(DetectionSet{"f", {{24, 24, 32, 32, 0.9}}}, 64, 64);
  const RegionMasks no_box = build_masks(DetectionSet{}, 64, 64);
  in.masks = &with_box;
  const double face_with = total_loss(in, LossWeights{}, &fx).weighted.face;
  in.masks = &no_box;
  const double face_without = total_loss(in, LossWeights{}, &fx).weighted.face;
  const DetectionSet large{"l", {{0, 0, 300, 300, 1.0}}};
  const std::size_t kept = select_small_faces(large, 512, 512, 0.025).boxes.size();
  char buf[200];
  std::snprintf(buf, sizeof buf, "face loss: with box %.4g, without %.4g, 34%% box kept %zu", face_with,
                face_without, kept);
  return {face_with > 0.0 && face_without == 0.0 && kept == 0, buf};
}

// ---- 8 ----------------------------------------------------------------------------

Outcome criterion8() {
  const Codec model{CodecConfig{}};
  Rng rng(808);
  const std::vector<Tensor> images{synthetic_image(128, 128, rng), synthetic_image(128, 128, rng)};
  const std::vector<TimingRow> rows = timing_bench(model, images, {5, 10}, 10);
  const EncodeResult enc = encode_image(images[0], model);
  const int passes5 = decode_image(enc.bitstream, model).sequential_passes;
  CodecConfig ten_cfg;
  ten_cfg.entropy.groups = GroupPartition::ten_groups_for(ten_cfg.transform.m_channels).sizes();
  Codec ten(ten_cfg);
  ten.copy_weights_from(model);
  const int passes10 = decode_image(encode_image(images[0], ten).bitstream, ten).sequential_passes;
  char buf[200];
  std::snprintf(buf, sizeof buf, "decode passes: 5 groups %d, 10 groups %d; median decode %.2f ms vs %.2f ms",
                passes5, passes10, rows[0].dec_ms, rows[1].dec_ms);
  const bool ok = passes5 == 10 && passes10 == 20 && rows[0].pass_count == 10 && rows[1].pass_count == 20 &&
                  rows[0].dec_ms <= rows[1].dec_ms;
  return {ok, buf};
}

// ---- 9 ----------------------------------------------------------------------------

RDCurve make_curve(const std::vector<std::pair<double, double>>& rate_quality) {
  RDCurve c;
  for (const auto& [r, q] : rate_quality) {
    RDPoint p;
    p.bpp = r;
    p.psnr = q;
    c.points.push_back(p);
  }
  return c;
}

// Lagrange interpolant of ln(rate) over quality through the four points.
double log_rate_at(const RDCurve& c, double q) {
  double v = 0.0;
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    double l = 1.0;
    for (std::size_t j = 0; j < c.points.size(); ++j)
      if (j != i) l *= (q - c.points[j].psnr) / (c.points[i].psnr - c.points[j].psnr);
    v += l * std::log(c.points[i].bpp);
  }
  return v;
}

double trapezoid_bd_rate(const RDCurve& anchor, const RDCurve& test) {
  const double lo = std::max(anchor.points.front().psnr, test.points.front().psnr);
  const double hi = std::min(anchor.points.back().psnr, test.points.back().psnr);
  constexpr int kSteps = 200000;
  const double dq = (hi - lo) / kSteps;
  double integral = 0.0;
  for (int k = 0; k <= kSteps; ++k) {
    const double q = lo + k * dq;
    const double f = log_rate_at(test, q) - log_rate_at(anchor, q);
    integral += (k == 0 || k == kSteps ? 0.5 : 1.0) * f * dq;
  }
  return (std::exp(integral / (hi - lo)) - 1.0) * 100.0;
}

Outcome criterion9() {
  const RDCurve anchor = make_curve({{0.033160363061378338, 28}, {0.061685893788735721, 31},
                                     {0.12533062920313606, 34}, {0.2919712326175975, 37}});
  const RDCurve test = make_curve({{0.037060632179501528, 29}, {0.076871121973581591, 32.5},
                                   {0.14227407158651353, 35}, {0.4001463195048845, 38.5}});
  const double same = bd_rate(anchor, anchor);
  RDCurve scaled = anchor;
  for (auto& p : scaled.points) p.bpp *= 0.9;
  const double tenth = bd_rate(anchor, scaled);
  const double v = bd_rate(anchor, test);
  const double oracle = trapezoid_bd_rate(anchor, test);
  char buf[200];
  std::snprintf(buf, sizeof buf, "bd-rate: identical %.3f%%, 0.9x rate %.3f%%, synthetic %.4f%% vs oracle %.4f%%",
                same, tenth, v, oracle);
  const bool ok = std::abs(same) < 5e-4 && std::abs(tenth + 10.0) <= 0.1 &&
                  std::abs(v - oracle) <= 0.002 * std::abs(oracle);
  return {ok, buf};
}

// ---- 10 ---------------------------------------------------------------------------

Outcome criterion10() {
  Rng rng(1010);
  InvertedBottleneck block(32, 2, Activation::kGelu, rng);
  const Var x = Var::constant(rng.normal_tensor(Shape{1, 32, 16, 16}, 0.0, 1.0));
  const bool shapes = block.hidden(x).shape() == Shape{1, 64, 16, 16} && block.forward(x).shape() == Shape{1, 32, 16, 16};
  ParameterList params;
  block.collect("ib", params);
  const std::size_t c = 32, h = 64;
  const std::size_t formula = (c * h + h) + (9 * h * h + h) + (h * c + c);
  const std::size_t count = parameter_count(params);
  block.zero_init_projection();
  const bool identity = bitwise_equal(block.forward(x).value(), x.value());
  char buf[200];
  std::snprintf(buf, sizeof buf, "inverted bottleneck: identity %s, shapes %s, parameters %zu (layer formula %zu)",
                identity ? "yes" : "no", shapes ? "yes" : "no", count, formula);
  return {identity && shapes && count == formula, buf};
}

}  // namespace
}  // namespace hflic

int main() {
  using namespace hflic;
  const std::vector<Outcome (*)()> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                            criterion6, criterion7, criterion8, criterion9, criterion10};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %zu %s\n", o.pass ? "PASS" : "FAIL", i + 1, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
