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

#include <cstdint>
#include <span>
#include <vector>

namespace hflic {

inline constexpr int kCdfPrecisionBits = 16;
inline constexpr std::uint32_t kCdfTotal = 1u << kCdfPrecisionBits;

// Quantized CDF over `count` consecutive integer symbols starting at
// `offset`, framed by two escape bins:
//   bin 0               symbols below offset
//   bins 1..count       symbols offset .. offset + count - 1
//   bin count + 1       symbols above the range
// cdf has count + 3 entries, cdf.front() == 0, cdf.back() == 2^16 and every
// bin has frequency >= 1.
struct CdfTable {
  std::vector<std::uint32_t> cdf;
  std::int32_t offset = 0;
  std::int32_t count = 0;

  int bins() const { return count + 2; }
  std::uint32_t freq(int bin) const { return cdf[bin + 1] - cdf[bin]; }
  // Throws ConfigError when an invariant is broken.
  void validate() const;
  friend bool operator==(const CdfTable&, const CdfTable&) = default;
};

// Quantizes bin probabilities (low tail, symbols..., high tail) to 16-bit
// frequencies: freq = max(1, round(p * 2^16)); the difference to 2^16 is then
// added to the largest symbol bin (escape bins excluded; ties go to the bin
// nearest the middle index, then the lower index). If that would push it
// below 1, the deficit is instead taken one unit at a time from the currently
// largest bin of the whole table.
CdfTable quantize_cdf(std::span<const double> bin_probs, std::int32_t offset);

// Discretized Gaussian over [-support, support] around round-free symbols
// (the coded value is the integer residual y_hat - mu).
CdfTable build_cdf(double mu, double sigma, int support);

// Bin frequencies before the sum-to-2^16 correction; exposed for tests.
std::vector<std::uint32_t> raw_frequencies(std::span<const double> bin_probs);

// Carry-propagating range coder: 64-bit low, 32-bit range, byte output,
// normalization when range < 2^24. The leading byte (always zero) is not
// written and the flush writes a single byte plus pending carries.
class RangeEncoder {
 public:
  void encode(std::int32_t symbol, const CdfTable& table);
  void encode_bin(std::uint32_t cum, std::uint32_t freq);
  // Equiprobable bits, MSB first.
  void encode_bits(std::uint64_t value, int nbits);
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t pending_ = 1;  // counts the held cache byte
  bool first_ = true;
  bool any_ = false;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);

  std::int32_t decode(const CdfTable& table);
  std::uint32_t decode_bin(const std::vector<std::uint32_t>& cdf);
  std::uint64_t decode_bits(int nbits);
  // Throws DecodeError unless the stream was consumed exactly.
  void finish() const;

 private:
  std::uint8_t next_byte();
  void normalize();

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::size_t overrun_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
};

// Bytes read past the end of a well-formed stream by the decoder.
inline constexpr std::size_t kDecoderTailBytes = 3;

std::vector<std::uint8_t> range_encode(std::span<const std::int32_t> symbols,
                                       std::span<const CdfTable> cdfs);
std::vector<std::int32_t> range_decode(std::span<const std::uint8_t> bytes,
                                       std::span<const CdfTable> cdfs);

}  // namespace hflic
