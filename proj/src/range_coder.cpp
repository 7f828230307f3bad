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

#include "hflic/range_coder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "hflic/errors.hpp"
#include "hflic/gaussian.hpp"

namespace hflic {

namespace {
constexpr std::uint32_t kTop = 1u << 24;
constexpr int kMaxGammaBits = 40;
}  // namespace

void CdfTable::validate() const {
  if (count < 1) throw ConfigError("cdf: empty symbol range");
  if (cdf.size() != static_cast<std::size_t>(count) + 3) throw ConfigError("cdf: wrong size");
  if (cdf.front() != 0 || cdf.back() != kCdfTotal) throw ConfigError("cdf: bad endpoints");
  for (int b = 0; b < bins(); ++b) {
    if (cdf[b + 1] <= cdf[b]) throw ConfigError("cdf: zero-frequency bin");
  }
}

std::vector<std::uint32_t> raw_frequencies(std::span<const double> bin_probs) {
  std::vector<std::uint32_t> freq(bin_probs.size());
  for (std::size_t i = 0; i < bin_probs.size(); ++i) {
    const double p = std::clamp(bin_probs[i], 0.0, 1.0);
    freq[i] = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::lround(p * kCdfTotal)));
  }
  return freq;
}

CdfTable quantize_cdf(std::span<const double> bin_probs, std::int32_t offset) {
  if (bin_probs.size() < 3) throw ConfigError("cdf: need at least one symbol bin");
  if (bin_probs.size() > kCdfTotal) throw ConfigError("cdf: too many bins for 16-bit precision");
  std::vector<std::uint32_t> freq = raw_frequencies(bin_probs);
  std::int64_t total = 0;
  for (auto f : freq) total += f;
  std::int64_t diff = static_cast<std::int64_t>(kCdfTotal) - total;
  const auto largest = [&] {
    return static_cast<std::size_t>(std::max_element(freq.begin(), freq.end()) - freq.begin());
  };
  // Largest symbol bin (escape bins excluded), ties toward the middle bin.
  const std::size_t middle = freq.size() / 2;
  std::size_t top = 1;
  for (std::size_t b = 1; b + 1 < freq.size(); ++b) {
    const auto dist = [&](std::size_t i) { return i > middle ? i - middle : middle - i; };
    if (freq[b] > freq[top] || (freq[b] == freq[top] && dist(b) < dist(top))) top = b;
  }
  if (static_cast<std::int64_t>(freq[top]) + diff >= 1) {
    freq[top] = static_cast<std::uint32_t>(freq[top] + diff);
  } else {
    while (diff < 0) {
      top = largest();
      if (freq[top] <= 1) throw ConfigError("cdf: cannot fit bins into 16-bit total");
      --freq[top];
      ++diff;
    }
  }
  CdfTable table;
  table.offset = offset;
  table.count = static_cast<std::int32_t>(bin_probs.size()) - 2;
  table.cdf.resize(freq.size() + 1);
  table.cdf[0] = 0;
  for (std::size_t i = 0; i < freq.size(); ++i) table.cdf[i + 1] = table.cdf[i] + freq[i];
  return table;
}

CdfTable build_cdf(double mu, double sigma, int support) {
  if (!(sigma > 0.0)) throw ConfigError("cdf: sigma must be positive");
  if (support < 0) throw ConfigError("cdf: negative support");
  std::vector<double> probs;
  probs.reserve(2 * support + 3);
  probs.push_back(gaussian_lower_tail(-support - 0.5 - mu, sigma));
  for (int k = -support; k <= support; ++k) probs.push_back(gaussian_bin_probability(k - mu, sigma));
  probs.push_back(gaussian_lower_tail(mu - (support + 0.5), sigma));
  return quantize_cdf(probs, -support);
}

// ---- encoder ---------------------------------------------------------------------

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t byte = cache_;
    do {
      const auto out = static_cast<std::uint8_t>(byte + carry);
      if (first_) {
        first_ = false;  // leading byte is always zero
      } else {
        out_.push_back(out);
      }
      byte = 0xFF;
    } while (--pending_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++pending_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::encode_bin(std::uint32_t cum, std::uint32_t freq) {
  const std::uint32_t r = range_ >> kCdfPrecisionBits;
  low_ += static_cast<std::uint64_t>(r) * cum;
  range_ = r * freq;
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
  any_ = true;
}

void RangeEncoder::encode_bits(std::uint64_t value, int nbits) {
  for (int i = nbits - 1; i >= 0; --i) {
    const std::uint32_t bit = (value >> i) & 1u;
    encode_bin(bit * (kCdfTotal / 2), kCdfTotal / 2);
  }
}

void RangeEncoder::encode(std::int32_t symbol, const CdfTable& table) {
  const std::int64_t s = symbol;
  int bin;
  std::uint64_t excess = 0;
  if (s < table.offset) {
    bin = 0;
    excess = static_cast<std::uint64_t>(table.offset - 1 - s);
  } else if (s >= static_cast<std::int64_t>(table.offset) + table.count) {
    bin = table.count + 1;
    excess = static_cast<std::uint64_t>(s - table.offset - table.count);
  } else {
    bin = static_cast<int>(s - table.offset) + 1;
  }
  encode_bin(table.cdf[bin], table.freq(bin));
  if (bin == 0 || bin == table.count + 1) {
    // Elias-gamma code of excess + 1 with equiprobable bits.
    const std::uint64_t v = excess + 1;
    const int nb = std::bit_width(v) - 1;
    for (int i = 0; i < nb; ++i) encode_bits(1, 1);
    encode_bits(0, 1);
    encode_bits(v, nb);
  }
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  if (!any_) return {};
  // Any value in [low, low + range) decodes correctly; pick the one whose
  // low 24 bits are zero so only its top byte needs to be written.
  low_ = (low_ + (kTop - 1)) & ~static_cast<std::uint64_t>(kTop - 1);
  shift_low();
  shift_low();
  any_ = false;
  return std::move(out_);
}

// ---- decoder ---------------------------------------------------------------------

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
  if (bytes_.empty()) return;
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ < bytes_.size()) return bytes_[pos_++];
  ++overrun_;
  return 0;
}

void RangeDecoder::normalize() {
  while (range_ < kTop) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
}

std::uint32_t RangeDecoder::decode_bin(const std::vector<std::uint32_t>& cdf) {
  if (bytes_.empty()) throw DecodeError("range decoder: stream is empty");
  if (overrun_ > kDecoderTailBytes) throw DecodeError("range decoder: stream truncated");
  const std::uint32_t r = range_ >> kCdfPrecisionBits;
  const std::uint32_t q = code_ / r;
  if (q >= kCdfTotal) throw DecodeError("range decoder: corrupt stream");
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), q);
  const auto bin = static_cast<std::uint32_t>(it - cdf.begin()) - 1;
  code_ -= r * cdf[bin];
  range_ = r * (cdf[bin + 1] - cdf[bin]);
  normalize();
  return bin;
}

std::uint64_t RangeDecoder::decode_bits(int nbits) {
  static const std::vector<std::uint32_t> kBit{0, kCdfTotal / 2, kCdfTotal};
  std::uint64_t v = 0;
  for (int i = 0; i < nbits; ++i) v = (v << 1) | decode_bin(kBit);
  return v;
}

std::int32_t RangeDecoder::decode(const CdfTable& table) {
  const std::uint32_t bin = decode_bin(table.cdf);
  if (bin >= 1 && bin <= static_cast<std::uint32_t>(table.count)) {
    return table.offset + static_cast<std::int32_t>(bin) - 1;
  }
  int nb = 0;
  while (decode_bits(1) == 1) {
    if (++nb > kMaxGammaBits) throw DecodeError("range decoder: escape code too long");
  }
  const std::uint64_t v = (std::uint64_t{1} << nb) | decode_bits(nb);
  const std::int64_t excess = static_cast<std::int64_t>(v - 1);
  const std::int64_t s = bin == 0 ? static_cast<std::int64_t>(table.offset) - 1 - excess
                                  : static_cast<std::int64_t>(table.offset) + table.count + excess;
  if (s < INT32_MIN || s > INT32_MAX) throw DecodeError("range decoder: escape out of range");
  return static_cast<std::int32_t>(s);
}

void RangeDecoder::finish() const {
  if (bytes_.empty()) return;
  if (pos_ != bytes_.size()) throw DecodeError("range decoder: trailing bytes in stream");
  if (overrun_ != kDecoderTailBytes) throw DecodeError("range decoder: stream truncated");
}

std::vector<std::uint8_t> range_encode(std::span<const std::int32_t> symbols,
                                       std::span<const CdfTable> cdfs) {
  if (symbols.size() != cdfs.size()) throw ConfigError("range_encode: one table per symbol");
  RangeEncoder enc;
  for (std::size_t i = 0; i < symbols.size(); ++i) enc.encode(symbols[i], cdfs[i]);
  return enc.finish();
}

std::vector<std::int32_t> range_decode(std::span<const std::uint8_t> bytes,
                                       std::span<const CdfTable> cdfs) {
  RangeDecoder dec(bytes);
  std::vector<std::int32_t> out;
  out.reserve(cdfs.size());
  for (const auto& t : cdfs) out.push_back(dec.decode(t));
  dec.finish();
  return out;
}

}  // namespace hflic
