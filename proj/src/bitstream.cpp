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

#include "hflic/bitstream.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "hflic/errors.hpp"
#include "hflic/gaussian.hpp"

namespace hflic {

namespace {

constexpr std::size_t kFixedHeaderBytes = 4 + 1 + 1 + 2 + 8 + 4 * 4 + 2;

class Writer {
 public:
  template <class T>
  void put(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
    }
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  template <class T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw HeaderError("bitstream: header truncated");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> b) {
  return static_cast<std::uint32_t>(
      ::crc32(::crc32(0L, Z_NULL, 0), b.data(), static_cast<uInt>(b.size())));
}

int support_for(int max_abs) { return std::clamp(max_abs, kMinSupport, kMaxSupport); }

std::int32_t to_symbol(double r) {
  if (!(std::abs(r) < 2147483647.0)) throw ValidationError("latent residual out of range");
  return static_cast<std::int32_t>(r);
}

std::vector<CdfTable> prior_tables(const FactorizedPrior& prior, int support) {
  std::vector<CdfTable> tables;
  for (int c = 0; c < prior.channels(); ++c) {
    tables.push_back(quantize_cdf(prior.bin_probabilities(c, support), -support));
  }
  return tables;
}

// Visits (channel, row, col) of one checkerboard phase in coding order.
template <class F>
void for_phase(int channels, int h, int w, CheckerboardPhase phase, F&& f) {
  const bool anchor = phase == CheckerboardPhase::kAnchor;
  for (int c = 0; c < channels; ++c)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        if (is_anchor(i, j) == anchor) f(c, i, j);
}

constexpr CheckerboardPhase kPhases[2] = {CheckerboardPhase::kAnchor,
                                          CheckerboardPhase::kNonAnchor};

}  // namespace

int padded_size(int n) { return std::max(64, (n + 63) / 64 * 64); }

std::size_t Bitstream::payload_bytes() const {
  std::size_t n = 0;
  for (const auto& p : payloads) n += p.size();
  return n;
}

std::size_t Bitstream::total_bytes() const { return serialize().size(); }

std::vector<std::uint8_t> Bitstream::serialize() const {
  const BitstreamHeader& h = header;
  if (static_cast<int>(payloads.size()) != h.payload_count() ||
      h.payload_lengths.size() != payloads.size() || h.payload_crc32.size() != payloads.size()) {
    throw ConfigError("bitstream: payload table does not match payloads");
  }
  Writer w;
  for (char c : kMagic) w.put(static_cast<std::uint8_t>(c));
  w.put(h.version);
  w.put(static_cast<std::uint8_t>(h.group_count()));
  w.put(std::uint16_t{0});
  w.put(h.model_id);
  w.put(h.orig_h);
  w.put(h.orig_w);
  w.put(h.padded_h);
  w.put(h.padded_w);
  w.put(h.z_support);
  for (auto s : h.y_support) w.put(s);
  for (auto l : h.payload_lengths) w.put(l);
  for (auto c : h.payload_crc32) w.put(c);
  for (const auto& p : payloads) w.bytes.insert(w.bytes.end(), p.begin(), p.end());
  return std::move(w.bytes);
}

Bitstream Bitstream::parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFixedHeaderBytes) throw HeaderError("bitstream: header truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw HeaderError("bitstream: bad magic");
  Reader r(bytes.subspan(4));
  Bitstream bs;
  BitstreamHeader& h = bs.header;
  h.version = r.get<std::uint8_t>();
  if (h.version != kFormatVersion) {
    throw HeaderError("bitstream: unsupported version " + std::to_string(h.version));
  }
  const int groups = r.get<std::uint8_t>();
  if (groups < 1) throw HeaderError("bitstream: zero groups");
  (void)r.get<std::uint16_t>();
  h.model_id = r.get<std::uint64_t>();
  h.orig_h = r.get<std::uint32_t>();
  h.orig_w = r.get<std::uint32_t>();
  h.padded_h = r.get<std::uint32_t>();
  h.padded_w = r.get<std::uint32_t>();
  h.z_support = r.get<std::uint16_t>();
  for (int g = 0; g < groups; ++g) h.y_support.push_back(r.get<std::uint16_t>());
  for (int i = 0; i < h.payload_count(); ++i) h.payload_lengths.push_back(r.get<std::uint32_t>());
  for (int i = 0; i < h.payload_count(); ++i) h.payload_crc32.push_back(r.get<std::uint32_t>());
  if (h.orig_h == 0 || h.orig_w == 0 || h.padded_h % 64 != 0 || h.padded_w % 64 != 0 ||
      h.orig_h > h.padded_h || h.orig_w > h.padded_w) {
    throw HeaderError("bitstream: inconsistent image size");
  }
  std::size_t pos = 4 + r.pos();
  for (int i = 0; i < h.payload_count(); ++i) {
    const std::size_t len = h.payload_lengths[i];
    const std::size_t avail = bytes.size() - pos;
    if (len > avail) {
      bs.truncated_payload = i;
      bs.payloads.emplace_back(bytes.begin() + pos, bytes.end());
      pos = bytes.size();
      while (static_cast<int>(bs.payloads.size()) < h.payload_count()) bs.payloads.emplace_back();
      return bs;
    }
    bs.payloads.emplace_back(bytes.begin() + pos, bytes.begin() + pos + len);
    pos += len;
  }
  if (pos != bytes.size()) throw HeaderError("bitstream: trailing bytes after last payload");
  return bs;
}

EncodeResult encode_image(const Tensor& image, const Codec& model) {
  NoGradGuard no_grad;
  const Shape s = image.shape();
  if (s.n != 1 || s.c != 3) throw ConfigError("encode: expected a (1,3,H,W) image, got " + s.str());
  if (!image.all_finite()) throw ValidationError("encode: non-finite pixel values");
  for (double v : image.values()) {
    if (v < 0.0 || v > 1.0) throw ValidationError("encode: pixel values outside [0,1]");
  }
  const Codec& m = model;
  const GroupPartition& part = m.partition();
  const int ph = padded_size(s.h), pw = padded_size(s.w);

  const Tensor y = m.analysis().forward(Var::constant(pad_replicate(image, ph, pw))).value();
  const Tensor z = m.hyper_analysis().forward(Var::constant(y)).value();

  EncodeResult res;
  res.z_hat = quantize_round(z, Tensor(z.shape()));
  const Var hyper = m.hyper_synthesis().forward(Var::constant(res.z_hat));

  BitstreamHeader& hdr = res.bitstream.header;
  hdr.model_id = m.model_id();
  hdr.orig_h = static_cast<std::uint32_t>(s.h);
  hdr.orig_w = static_cast<std::uint32_t>(s.w);
  hdr.padded_h = static_cast<std::uint32_t>(ph);
  hdr.padded_w = static_cast<std::uint32_t>(pw);

  // Hyper-latent stream.
  int z_max = 0;
  for (double v : res.z_hat.values()) z_max = std::max(z_max, std::abs(to_symbol(v)));
  hdr.z_support = static_cast<std::uint16_t>(support_for(z_max));
  {
    const auto tables = prior_tables(m.prior(), hdr.z_support);
    RangeEncoder enc;
    const Shape zs = res.z_hat.shape();
    for (int c = 0; c < zs.c; ++c)
      for (std::size_t i = 0; i < zs.plane(); ++i) enc.encode(to_symbol(res.z_hat.plane(0, c)[i]), tables[c]);
    res.bitstream.payloads.push_back(enc.finish());
    res.estimated_bits_z = factorized_rate(m.prior(), res.z_hat);
  }

  // Latent: resolve every symbol in coding order first (the support of a
  // group depends on all of its symbols), then entropy-code each phase.
  const Shape ys = y.shape();
  res.y_hat = Tensor(ys);
  struct PhaseSymbols {
    std::vector<std::int32_t> symbols;
    std::vector<double> sigma;
  };
  std::vector<PhaseSymbols> phases;
  for (int g = 0; g < part.count(); ++g) {
    const int off = part.offset(g);
    int group_max = 0;
    for (CheckerboardPhase phase : kPhases) {
      const GaussianParams p = m.context().params(hyper, Var::constant(res.y_hat), g, phase);
      PhaseSymbols ps;
      for_phase(part.size(g), ys.h, ys.w, phase, [&](int c, int i, int j) {
        const double mu = p.mu.value().at(0, c, i, j);
        const double sig = p.sigma.value().at(0, c, i, j);
        const std::int32_t sym = to_symbol(std::round(y.at(0, off + c, i, j) - mu));
        res.y_hat.at(0, off + c, i, j) = mu + sym;
        ps.symbols.push_back(sym);
        ps.sigma.push_back(sig);
        group_max = std::max(group_max, std::abs(sym));
        res.estimated_bits_y += floored_bits(gaussian_bin_probability(sym, sig));
      });
      phases.push_back(std::move(ps));
    }
    hdr.y_support.push_back(static_cast<std::uint16_t>(support_for(group_max)));
  }
  for (int g = 0; g < part.count(); ++g) {
    for (int k = 0; k < 2; ++k) {
      const PhaseSymbols& ps = phases[2 * g + k];
      RangeEncoder enc;
      for (std::size_t i = 0; i < ps.symbols.size(); ++i) {
        enc.encode(ps.symbols[i], build_cdf(0.0, ps.sigma[i], hdr.y_support[g]));
      }
      res.bitstream.payloads.push_back(enc.finish());
    }
  }
  for (const auto& p : res.bitstream.payloads) {
    hdr.payload_lengths.push_back(static_cast<std::uint32_t>(p.size()));
    hdr.payload_crc32.push_back(crc32_of(p));
  }
  const Tensor x_hat = m.synthesis().forward(Var::constant(res.y_hat)).value();
  res.reconstruction = crop(clamp(x_hat, 0.0, 1.0), s.h, s.w);
  return res;
}

DecodeResult decode_image(const Bitstream& bitstream, const Codec& model, bool allow_partial) {
  NoGradGuard no_grad;
  const BitstreamHeader& hdr = bitstream.header;
  const Codec& m = model;
  const GroupPartition& part = m.partition();
  if (hdr.model_id != m.model_id()) throw ModelMismatchError("bitstream: model id does not match");
  if (hdr.group_count() != part.count()) throw ModelMismatchError("bitstream: group count mismatch");
  if (static_cast<int>(bitstream.payloads.size()) != hdr.payload_count()) {
    throw HeaderError("bitstream: payload count mismatch");
  }

  DecodeResult res;
  // Runs one payload; converts failures into a partial result if allowed.
  auto guarded = [&](int index, auto&& body) -> bool {
    try {
      const auto& payload = bitstream.payloads[index];
      if ((bitstream.truncated_payload && *bitstream.truncated_payload <= index) ||
          payload.size() != hdr.payload_lengths[index]) {
        throw PayloadError("payload " + std::to_string(index) + " is truncated", index);
      }
      if (crc32_of(payload) != hdr.payload_crc32[index]) {
        throw PayloadError("payload " + std::to_string(index) + " failed its checksum", index);
      }
      RangeDecoder dec(payload);
      body(dec);
      dec.finish();
      return true;
    } catch (const PayloadError& e) {
      if (!allow_partial) throw;
      res.error = e.what();
      res.failed_payload = index;
    } catch (const DecodeError& e) {
      if (!allow_partial) throw PayloadError(e.what(), index);
      res.error = e.what();
      res.failed_payload = index;
    }
    return false;
  };

  const int lh = static_cast<int>(hdr.padded_h) / 16, lw = static_cast<int>(hdr.padded_w) / 16;
  const int nz = m.config().transform.z_channels;
  res.z_hat = Tensor(Shape{1, nz, lh / 4, lw / 4});
  const bool z_ok = guarded(0, [&](RangeDecoder& dec) {
    const auto tables = prior_tables(m.prior(), hdr.z_support);
    for (int c = 0; c < nz; ++c)
      for (std::size_t i = 0; i < res.z_hat.shape().plane(); ++i)
        res.z_hat.plane(0, c)[i] = dec.decode(tables[c]);
  });
  res.y_hat = Tensor(Shape{1, part.total(), lh, lw});
  if (!z_ok) return res;
  const Var hyper = m.hyper_synthesis().forward(Var::constant(res.z_hat));

  for (int g = 0; g < part.count(); ++g) {
    const int off = part.offset(g);
    for (CheckerboardPhase phase : kPhases) {
      const GaussianParams p = m.context().params(hyper, Var::constant(res.y_hat), g, phase);
      ++res.sequential_passes;
      const bool ok = guarded(payload_index(g, phase), [&](RangeDecoder& dec) {
        for_phase(part.size(g), lh, lw, phase, [&](int c, int i, int j) {
          const double sig = p.sigma.value().at(0, c, i, j);
          const std::int32_t sym = dec.decode(build_cdf(0.0, sig, hdr.y_support[g]));
          res.y_hat.at(0, off + c, i, j) = p.mu.value().at(0, c, i, j) + sym;
        });
      });
      if (!ok) return res;
    }
    res.groups_complete = g + 1;
  }
  const Tensor x_hat = m.synthesis().forward(Var::constant(res.y_hat)).value();
  res.image = crop(clamp(x_hat, 0.0, 1.0), static_cast<int>(hdr.orig_h),
                   static_cast<int>(hdr.orig_w));
  return res;
}

}  // namespace hflic
