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

#include "hflic/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "hflic/archive.hpp"
#include "hflic/autograd.hpp"
#include "hflic/bitstream.hpp"
#include "hflic/errors.hpp"
#include "hflic/image_io.hpp"
#include "hflic/ops.hpp"

namespace hflic {

namespace {

void check_pair(const Tensor& x, const Tensor& y, const char* what) {
  if (!(x.shape() == y.shape()) || x.empty()) {
    throw ValidationError(std::string(what) + ": shape mismatch " + x.shape().str() + " vs " +
                          y.shape().str());
  }
  for (const Tensor* t : {&x, &y}) {
    for (double v : t->values()) {
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(std::string(what) + ": values must lie in [0,1]");
    }
  }
}

constexpr double kSsimSigma = 1.5;
constexpr int kSsimWindow = 11;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;
constexpr double kMsWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

std::vector<double> gaussian_window(int size) {
  std::vector<double> g(size);
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - (size - 1) / 2.0;
    g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// Separable valid filtering of one plane.
std::vector<double> filter_valid(const double* p, int h, int w, const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  const int oh = h - k + 1, ow = w - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < ow; ++j) {
      double s = 0.0;
      for (int t = 0; t < k; ++t) s += g[t] * p[i * w + j + t];
      rows[static_cast<std::size_t>(i) * ow + j] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int i = 0; i < oh; ++i) {
    for (int j = 0; j < ow; ++j) {
      double s = 0.0;
      for (int t = 0; t < k; ++t) s += g[t] * rows[static_cast<std::size_t>(i + t) * ow + j];
      out[static_cast<std::size_t>(i) * ow + j] = s;
    }
  }
  return out;
}

struct SsimTerms {
  double ssim = 0.0;
  double cs = 0.0;
};

SsimTerms ssim_plane(const double* x, const double* y, int h, int w) {
  const int k = std::min({kSsimWindow, h, w});
  const auto g = gaussian_window(k);
  const std::size_t n = static_cast<std::size_t>(h) * w;
  std::vector<double> xy(n), xx_yy(n);
  for (std::size_t i = 0; i < n; ++i) {
    xy[i] = x[i] * y[i];
    xx_yy[i] = x[i] * x[i] + y[i] * y[i];
  }
  const auto mx = filter_valid(x, h, w, g);
  const auto my = filter_valid(y, h, w, g);
  const auto mxy = filter_valid(xy.data(), h, w, g);
  const auto mxx_yy = filter_valid(xx_yy.data(), h, w, g);
  const double c1 = kK1 * kK1, c2 = kK2 * kK2;
  double ssim_sum = 0.0, cs_sum = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double num0 = 2.0 * mx[i] * my[i];
    const double den0 = mx[i] * mx[i] + my[i] * my[i];
    const double lum = (num0 + c1) / (den0 + c1);
    const double cs = (2.0 * mxy[i] - num0 + c2) / (mxx_yy[i] - den0 + c2);
    ssim_sum += lum * cs;
    cs_sum += cs;
  }
  const double m = static_cast<double>(mx.size());
  return {ssim_sum / m, cs_sum / m};
}

// 2x2 average; odd edges repeat their last row or column.
std::vector<double> halve(const std::vector<double>& p, int h, int w, int& oh, int& ow) {
  oh = (h + 1) / 2;
  ow = (w + 1) / 2;
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int i = 0; i < oh; ++i) {
    const int i0 = 2 * i, i1 = std::min(2 * i + 1, h - 1);
    for (int j = 0; j < ow; ++j) {
      const int j0 = 2 * j, j1 = std::min(2 * j + 1, w - 1);
      out[static_cast<std::size_t>(i) * ow + j] =
          0.25 * (p[i0 * w + j0] + p[i0 * w + j1] + p[i1 * w + j0] + p[i1 * w + j1]);
    }
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mad(const std::vector<double>& v) {
  const double m = median(v);
  std::vector<double> d;
  for (double x : v) d.push_back(std::abs(x - m));
  return median(d);
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

double psnr(const Tensor& x, const Tensor& x_hat) {
  check_pair(x, x_hat, "psnr");
  double se = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double d = x[i] - x_hat[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(x.numel());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Tensor& x, const Tensor& x_hat) {
  check_pair(x, x_hat, "ssim");
  const Shape s = x.shape();
  double total = 0.0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) total += ssim_plane(x.plane(n, c), x_hat.plane(n, c), s.h, s.w).ssim;
  }
  return total / (s.n * s.c);
}

double ms_ssim(const Tensor& x, const Tensor& x_hat) {
  check_pair(x, x_hat, "ms_ssim");
  const Shape s = x.shape();
  double total = 0.0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      std::vector<double> a(x.plane(n, c), x.plane(n, c) + s.plane());
      std::vector<double> b(x_hat.plane(n, c), x_hat.plane(n, c) + s.plane());
      int h = s.h, w = s.w;
      double value = 1.0;
      for (int k = 0; k < 5; ++k) {
        if (k > 0) {
          int oh = 0, ow = 0;
          a = halve(a, h, w, oh, ow);
          b = halve(b, h, w, oh, ow);
          h = oh;
          w = ow;
        }
        const SsimTerms t = ssim_plane(a.data(), b.data(), h, w);
        const double term = std::max(0.0, k == 4 ? t.ssim : t.cs);
        value *= std::pow(term, kMsWeights[k]);
      }
      total += value;
    }
  }
  return total / (s.n * s.c);
}

double lpips_proxy(const Tensor& x, const Tensor& x_hat, const FeatureExtractor& fx) {
  if (!(x.shape() == x_hat.shape())) throw ValidationError("lpips_proxy: shape mismatch");
  // Feature extractors pool four times; the border past a multiple of 16 is dropped.
  const int h = x.shape().h / 16 * 16, w = x.shape().w / 16 * 16;
  if (h == 0 || w == 0) throw ValidationError("lpips_proxy: images must be at least 16x16");
  NoGradGuard guard;
  return feature_perceptual(Var::constant(crop(x, h, w)), Var::constant(crop(x_hat, h, w)), fx).item();
}

// ---- curves --------------------------------------------------------------------

void RDCurve::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].bpp > 0.0) || !std::isfinite(points[i].bpp)) {
      throw ValidationError("curve '" + label + "': bpp must be positive");
    }
    if (i > 0 && !(points[i].bpp > points[i - 1].bpp)) {
      throw ValidationError("curve '" + label + "': bpp must be strictly increasing");
    }
  }
}

std::string to_string(QualityField f) {
  switch (f) {
    case QualityField::kPsnr: return "psnr";
    case QualityField::kMsSsim: return "ms_ssim";
    case QualityField::kLpipsProxy: return "lpips_proxy";
  }
  return "psnr";
}

QualityField quality_field_from_string(const std::string& s) {
  if (s == "psnr") return QualityField::kPsnr;
  if (s == "ms_ssim") return QualityField::kMsSsim;
  if (s == "lpips_proxy") return QualityField::kLpipsProxy;
  throw ConfigError("unknown quality field '" + s + "'");
}

double quality_of(const RDPoint& p, QualityField f) {
  switch (f) {
    case QualityField::kPsnr: return p.psnr;
    case QualityField::kMsSsim: return p.ms_ssim;
    case QualityField::kLpipsProxy: return -p.lpips_proxy;
  }
  return p.psnr;
}

bool quality_monotone(const RDCurve& c, QualityField f) {
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    if (quality_of(c.points[i], f) < quality_of(c.points[i - 1], f)) return false;
  }
  return true;
}

std::vector<double> polyfit(const std::vector<double>& x, const std::vector<double>& y, int degree) {
  if (x.size() != y.size() || static_cast<int>(x.size()) < degree + 1) {
    throw ValidationError("polyfit needs at least degree + 1 points");
  }
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd a(n, degree + 1);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    double p = 1.0;
    for (int d = 0; d <= degree; ++d, p *= x[i]) a(i, d) = p;
    b(i) = y[i];
  }
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  return {c.data(), c.data() + c.size()};
}

double polyval(const std::vector<double>& coef, double x) {
  double v = 0.0;
  for (auto it = coef.rbegin(); it != coef.rend(); ++it) v = v * x + *it;
  return v;
}

namespace {

double poly_integral(const std::vector<double>& c, double lo, double hi) {
  double v = 0.0;
  for (std::size_t d = 0; d < c.size(); ++d) {
    const double e = static_cast<double>(d + 1);
    v += c[d] * (std::pow(hi, e) - std::pow(lo, e)) / e;
  }
  return v;
}

struct Fit {
  std::vector<double> coef;
  double lo, hi;
};

Fit fit_curve(const RDCurve& c, QualityField f) {
  c.validate();
  if (c.points.size() < 4) {
    throw ValidationError("curve '" + c.label + "' needs at least 4 points for BD-rate");
  }
  std::vector<double> q, r;
  for (const RDPoint& p : c.points) {
    const double v = quality_of(p, f);
    if (!std::isfinite(v)) throw ValidationError("curve '" + c.label + "' has non-finite quality");
    q.push_back(v);
    r.push_back(std::log(p.bpp));
  }
  const auto [mn, mx] = std::minmax_element(q.begin(), q.end());
  return {polyfit(q, r, 3), *mn, *mx};
}

}  // namespace

double bd_rate(const RDCurve& anchor, const RDCurve& test, QualityField f) {
  const Fit a = fit_curve(anchor, f);
  const Fit t = fit_curve(test, f);
  const double lo = std::max(a.lo, t.lo);
  const double hi = std::min(a.hi, t.hi);
  if (!(hi > lo)) {
    throw ValidationError("BD-rate: quality ranges of '" + anchor.label + "' and '" + test.label +
                          "' do not overlap");
  }
  const double avg = (poly_integral(t.coef, lo, hi) - poly_integral(a.coef, lo, hi)) / (hi - lo);
  return (std::exp(avg) - 1.0) * 100.0;
}

// ---- per-image evaluation ------------------------------------------------------

RDPoint evaluate_image(const Tensor& image, const Codec& model, const FeatureExtractor* fx) {
  RDPoint p;
  NoGradGuard guard;
  auto t0 = std::chrono::steady_clock::now();
  const EncodeResult enc = encode_image(image, model);
  const std::vector<std::uint8_t> bytes = enc.bitstream.serialize();
  p.enc_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  const DecodeResult dec = decode_image(Bitstream::parse(bytes), model);
  p.dec_ms = ms_since(t0);

  const Tensor decoded = quantize_8bit(dec.image);
  const Shape s = image.shape();
  p.bpp = static_cast<double>(bytes.size()) * 8.0 / (static_cast<double>(s.h) * s.w);
  p.psnr = psnr(image, decoded);
  p.ms_ssim = ms_ssim(image, decoded);
  p.lpips_proxy = fx ? lpips_proxy(image, decoded, *fx) : 0.0;
  return p;
}

std::vector<ImageEval> evaluate_images(const std::vector<NamedImage>& images, const Codec& model,
                                       const FeatureExtractor* fx, int workers) {
  std::vector<ImageEval> out(images.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < images.size(); i = next++) {
      try {
        const Tensor& img = images[i].image;
        out[i] = {images[i].id, img.shape().w, img.shape().h, evaluate_image(img, model, fx)};
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = images.size();
      }
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(images.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

RDPoint mean_point(const std::vector<ImageEval>& evals) {
  RDPoint m;
  if (evals.empty()) return m;
  for (const auto& e : evals) {
    m.bpp += e.point.bpp;
    m.psnr += e.point.psnr;
    m.ms_ssim += e.point.ms_ssim;
    m.lpips_proxy += e.point.lpips_proxy;
    m.enc_ms += e.point.enc_ms;
    m.dec_ms += e.point.dec_ms;
  }
  const double n = static_cast<double>(evals.size());
  m.bpp /= n;
  m.psnr /= n;
  m.ms_ssim /= n;
  m.lpips_proxy /= n;
  m.enc_ms /= n;
  m.dec_ms /= n;
  return m;
}

// ---- timing --------------------------------------------------------------------

GroupPartition partition_for_count(int m, int groups) {
  if (groups < 1 || groups > m) throw ConfigError("group count must lie in [1, M]");
  if (groups == 5) return GroupPartition::default_for(m);
  if (groups == 10) return GroupPartition::ten_groups_for(m);
  std::vector<int> sizes(groups, m / groups);
  for (int i = 0; i < m % groups; ++i) ++sizes[groups - 1 - i];
  return GroupPartition(m, sizes);
}

std::vector<TimingRow> timing_bench(const Codec& model, const std::vector<Tensor>& images,
                                    const std::vector<int>& group_counts, int repetitions) {
  if (images.empty()) throw ValidationError("timing_bench needs at least one image");
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  NoGradGuard guard;
  std::vector<TimingRow> rows;
  for (int groups : group_counts) {
    CodecConfig cfg = model.config();
    cfg.entropy.groups = partition_for_count(cfg.transform.m_channels, groups).sizes();
    Codec codec(cfg);
    codec.copy_weights_from(model);

    std::vector<std::vector<std::uint8_t>> streams;
    int passes = 0;
    for (const Tensor& img : images) {
      streams.push_back(encode_image(img, codec).bitstream.serialize());
      passes = decode_image(Bitstream::parse(streams.back()), codec).sequential_passes;
    }
    std::vector<double> enc, dec;
    for (int r = 0; r < repetitions; ++r) {
      auto t0 = std::chrono::steady_clock::now();
      for (const Tensor& img : images) (void)encode_image(img, codec);
      enc.push_back(ms_since(t0) / images.size());
      t0 = std::chrono::steady_clock::now();
      for (const auto& s : streams) (void)decode_image(Bitstream::parse(s), codec);
      dec.push_back(ms_since(t0) / images.size());
    }
    TimingRow row;
    row.config = std::to_string(groups) + "-group";
    row.groups = groups;
    row.pass_count = passes;
    row.repetitions = repetitions;
    row.enc_ms = median(enc);
    row.dec_ms = median(dec);
    row.enc_mad_ms = mad(enc);
    row.dec_mad_ms = mad(dec);
    rows.push_back(row);
  }
  return rows;
}

std::string timing_table_markdown(const std::vector<TimingRow>& rows) {
  std::ostringstream o;
  o << "| config | groups | passes | enc ms (median) | dec ms (median) | enc MAD | dec MAD | runs |\n"
    << "|---|---|---|---|---|---|---|---|\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "| %s | %d | %d | %.2f | %.2f | %.2f | %.2f | %d |\n", r.config.c_str(),
                  r.groups, r.pass_count, r.enc_ms, r.dec_ms, r.enc_mad_ms, r.dec_mad_ms, r.repetitions);
    o << buf;
  }
  return o.str();
}

// ---- CSV -----------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string quote_label(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

// Splits the leading, possibly quoted, label from the numeric fields.
bool take_label(const std::string& line, std::string& label, std::string& rest) {
  if (line.empty() || line[0] != '"') {
    const auto comma = line.find(',');
    if (comma == std::string::npos) return false;
    label = line.substr(0, comma);
    rest = line.substr(comma + 1);
    return true;
  }
  label.clear();
  for (std::size_t i = 1; i < line.size(); ++i) {
    if (line[i] == '"') {
      if (i + 1 < line.size() && line[i + 1] == '"') {
        label += '"';
        ++i;
      } else {
        if (i + 1 >= line.size() || line[i + 1] != ',') return false;
        rest = line.substr(i + 2);
        return true;
      }
    } else {
      label += line[i];
    }
  }
  return false;
}

}  // namespace

std::string to_csv(const std::vector<RDRow>& rows) {
  std::ostringstream o;
  o << kRdCsvHeader << '\n';
  for (const auto& r : rows) {
    const RDPoint& p = r.point;
    o << quote_label(r.label) << ',' << fmt(p.bpp) << ',' << fmt(p.psnr) << ',' << fmt(p.ms_ssim) << ','
      << fmt(p.lpips_proxy) << ',' << fmt(p.enc_ms) << ',' << fmt(p.dec_ms) << '\n';
  }
  return o.str();
}

std::string to_csv(const RDCurve& curve) {
  std::vector<RDRow> rows;
  for (const auto& p : curve.points) rows.push_back({curve.label, p});
  return to_csv(rows);
}

std::vector<RDRow> parse_rd_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    return ParseError(source + ":" + std::to_string(line_no) + ": " + msg);
  };
  std::vector<RDRow> rows;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != kRdCsvHeader) throw fail(std::string("expected header '") + kRdCsvHeader + "'");
      header = true;
      continue;
    }
    RDRow row;
    std::string rest;
    if (!take_label(line, row.label, rest)) throw fail("malformed label");
    const auto f = split(rest, ',');
    if (f.size() != 6) throw fail("expected 7 fields");
    double v[6];
    for (int i = 0; i < 6; ++i) {
      char* end = nullptr;
      v[i] = std::strtod(f[i].c_str(), &end);
      if (f[i].empty() || *end != '\0' || std::isnan(v[i])) throw fail("bad number '" + f[i] + "'");
    }
    row.point = {v[0], v[1], v[2], v[3], v[4], v[5]};
    rows.push_back(row);
  }
  if (!header) throw ParseError(source + ": empty CSV");
  return rows;
}

RDCurve curve_from_rows(const std::vector<RDRow>& rows) {
  RDCurve c;
  if (rows.empty()) throw ValidationError("curve has no rows");
  c.label = rows.front().label;
  for (const auto& r : rows) {
    if (r.label != c.label) throw ValidationError("curve mixes labels '" + c.label + "' and '" + r.label + "'");
    c.points.push_back(r.point);
  }
  return c;
}

RDCurve load_curve(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  RDCurve c = curve_from_rows(parse_rd_csv(std::string(bytes.begin(), bytes.end()), path.string()));
  c.validate();
  return c;
}

// ---- report --------------------------------------------------------------------

namespace {

std::string slug(const std::string& label) {
  std::string s;
  for (char c : label) s += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return s.empty() ? "curve" : s;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  write_file_atomic(p, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()),
                                                     text.size()));
}

std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

}  // namespace

std::string render_rd_svg(const std::vector<RDCurve>& curves, QualityField f) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  const double W = 640, H = 440, L = 70, R = 170, T = 30, B = 60;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      const double q = quality_of(p, f);
      if (!std::isfinite(q)) continue;
      x0 = std::min(x0, p.bpp);
      x1 = std::max(x1, p.bpp);
      y0 = std::min(y0, q);
      y1 = std::max(y1, q);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double px = (x1 - x0) * 0.05, py = (y1 - y0) * 0.05;
  x0 -= px, x1 += px, y0 -= py, y1 += py;
  auto sx = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
  auto sy = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream o;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                "font-family=\"sans-serif\" font-size=\"12\">\n",
                W, H);
  o << buf << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n", L,
                T, W - L - R, H - T - B);
  o << buf;
  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5.0, yv = y0 + (y1 - y0) * i / 5.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.3g</text>\n", sx(xv),
                  H - B + 18, xv);
    o << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.4g</text>\n", L - 6,
                  sy(yv) + 4, f == QualityField::kLpipsProxy ? -yv : yv);
    o << buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">bpp</text>\n",
                (L + W - R) / 2, H - 15);
  o << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"16\" y=\"%.1f\" text-anchor=\"middle\" transform=\"rotate(-90 16 %.1f)\">%s</text>\n",
                (T + H - B) / 2, (T + H - B) / 2, to_string(f).c_str());
  o << buf;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = kColors[i % 6];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : curves[i].points) {
      const double q = quality_of(p, f);
      if (!std::isfinite(q)) continue;
      std::snprintf(buf, sizeof buf, "%.1f,%.1f ", sx(p.bpp), sy(q));
      o << buf;
    }
    o << "\"/>\n";
    for (const auto& p : curves[i].points) {
      const double q = quality_of(p, f);
      if (!std::isfinite(q)) continue;
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"3\" fill=\"%s\"/>\n", sx(p.bpp), sy(q),
                    color);
      o << buf;
    }
    const double ly = T + 16 + 18 * static_cast<double>(i);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" stroke-width=\"2\"/>\n",
                  W - R + 12, ly - 4, W - R + 36, ly - 4, color);
    o << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\">", W - R + 42, ly);
    o << buf << xml_escape(curves[i].label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<std::filesystem::path> emit_rd_report(const std::vector<RDCurve>& curves,
                                                  const std::filesystem::path& out_dir) {
  if (curves.empty()) throw ValidationError("RD report needs at least one curve");
  std::set<std::string> names;
  for (const auto& c : curves) {
    c.validate();
    if (c.points.empty()) throw ValidationError("curve '" + c.label + "' has no points");
    if (!names.insert(slug(c.label)).second) throw ValidationError("duplicate curve label '" + c.label + "'");
  }
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  for (const auto& c : curves) {
    const auto p = out_dir / (slug(c.label) + ".csv");
    write_text(p, to_csv(c));
    written.push_back(p);
  }
  const auto plot = out_dir / "rd_psnr.svg";
  write_text(plot, render_rd_svg(curves, QualityField::kPsnr));
  written.push_back(plot);

  std::ostringstream md;
  char buf[256];
  md << "# Rate-distortion summary\n\n"
     << "lpips_proxy is a feature distance under the configured extractor; it is not comparable with "
        "published LPIPS numbers.\n\n"
     << "| curve | points | bpp range | PSNR range (dB) | MS-SSIM range | lpips_proxy range |\n"
     << "|---|---|---|---|---|---|\n";
  for (const auto& c : curves) {
    auto range = [&](auto get) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& p : c.points) lo = std::min(lo, get(p)), hi = std::max(hi, get(p));
      std::snprintf(buf, sizeof buf, "%.4g - %.4g", lo, hi);
      return std::string(buf);
    };
    md << "| " << c.label << " | " << c.points.size() << " | " << range([](const RDPoint& p) { return p.bpp; })
       << " | " << range([](const RDPoint& p) { return p.psnr; }) << " | "
       << range([](const RDPoint& p) { return p.ms_ssim; }) << " | "
       << range([](const RDPoint& p) { return p.lpips_proxy; }) << " |\n";
  }
  for (const auto& c : curves) {
    if (!quality_monotone(c, QualityField::kPsnr)) {
      md << "\nWarning: PSNR of '" << c.label << "' is not non-decreasing in bpp.\n";
    }
  }
  if (curves.size() > 1) {
    md << "\n## BD-rate against '" << curves.front().label << "'\n\n| curve | PSNR | MS-SSIM |\n|---|---|---|\n";
    for (std::size_t i = 1; i < curves.size(); ++i) {
      md << "| " << curves[i].label;
      for (QualityField f : {QualityField::kPsnr, QualityField::kMsSsim}) {
        try {
          std::snprintf(buf, sizeof buf, " | %.3f%%", bd_rate(curves.front(), curves[i], f));
          md << buf;
        } catch (const ValidationError& e) {
          md << " | n/a (" << e.what() << ")";
        }
      }
      md << " |\n";
    }
  }
  md << "\nPlot: rd_psnr.svg\n";
  const auto summary = out_dir / "summary.md";
  write_text(summary, md.str());
  written.push_back(summary);
  return written;
}

}  // namespace hflic
