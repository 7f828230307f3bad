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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hflic/model.hpp"
#include "hflic/range_coder.hpp"

namespace hflic {

inline constexpr char kMagic[4] = {'H', 'F', 'L', 'C'};
inline constexpr std::uint8_t kFormatVersion = 1;
inline constexpr int kMinSupport = 16;
inline constexpr int kMaxSupport = 32766;

// Fixed little-endian header; see docs/bitstream.md for the byte layout.
struct BitstreamHeader {
  std::uint8_t version = kFormatVersion;
  std::uint64_t model_id = 0;
  std::uint32_t orig_h = 0, orig_w = 0;
  std::uint32_t padded_h = 0, padded_w = 0;
  std::uint16_t z_support = kMinSupport;
  std::vector<std::uint16_t> y_support;  // one per group
  std::vector<std::uint32_t> payload_lengths;
  std::vector<std::uint32_t> payload_crc32;

  int group_count() const { return static_cast<int>(y_support.size()); }
  int payload_count() const { return 1 + 2 * group_count(); }
};

// Payload order: hyper-latent stream, then (group 0 anchor, group 0
// non-anchor, group 1 anchor, ...).
struct Bitstream {
  BitstreamHeader header;
  std::vector<std::vector<std::uint8_t>> payloads;

  std::vector<std::uint8_t> serialize() const;
  std::size_t payload_bytes() const;
  std::size_t total_bytes() const;

  // Throws HeaderError for a foreign or damaged header. A container whose
  // body is shorter than declared keeps the complete payloads; the first
  // incomplete one is flagged by `truncated_payload`.
  static Bitstream parse(std::span<const std::uint8_t> bytes);
  std::optional<int> truncated_payload;
};

inline int payload_index(int group, CheckerboardPhase phase) {
  return 1 + 2 * group + (phase == CheckerboardPhase::kNonAnchor ? 1 : 0);
}

struct EncodeResult {
  Bitstream bitstream;
  Tensor z_hat;            // (1, Nz, h/4, w/4)
  Tensor y_hat;            // (1, M, h, w)
  Tensor reconstruction;   // (1, 3, H, W), clamped and cropped
  double estimated_bits_y = 0.0;
  double estimated_bits_z = 0.0;
  double estimated_bits() const { return estimated_bits_y + estimated_bits_z; }
};

struct DecodeResult {
  Tensor z_hat;
  Tensor y_hat;
  Tensor image;  // empty when decoding stopped early
  int sequential_passes = 0;  // entropy-decoding phases run in order
  int groups_complete = 0;
  std::optional<std::string> error;
  std::optional<int> failed_payload;
};

// `image` is (1, 3, H, W) with values in [0, 1].
EncodeResult encode_image(const Tensor& image, const Codec& model);

// Throws HeaderError / PayloadError. With `allow_partial`, payload failures
// are reported in the result instead and decoding stops at that group.
DecodeResult decode_image(const Bitstream& bitstream, const Codec& model,
                          bool allow_partial = false);

int padded_size(int n);

}  // namespace hflic
