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
#include <filesystem>
#include <span>
#include <vector>

#include "hflic/range_coder.hpp"

namespace hflic {

inline constexpr char kConformanceMagic[4] = {'H', 'F', 'C', 'V'};
inline constexpr std::uint32_t kConformanceVersion = 1;

// One range-coder test case: symbol i is coded with tables[table_index[i]]
// and the reference coder produced `expected`.
struct ConformanceVector {
  std::vector<CdfTable> tables;
  std::vector<std::uint16_t> table_index;
  std::vector<std::int32_t> symbols;
  std::vector<std::uint8_t> expected;

  // Per-symbol table list for range_encode / range_decode.
  std::vector<CdfTable> symbol_tables() const;
  friend bool operator==(const ConformanceVector&, const ConformanceVector&) = default;
};

// Flat little-endian fixture; layout in docs/formats.md.
std::vector<std::uint8_t> serialize_conformance(std::span<const ConformanceVector> vectors);
// Throws ParseError for a malformed file or a CRC mismatch.
std::vector<ConformanceVector> parse_conformance(std::span<const std::uint8_t> bytes);

// Deterministic set: vector 0 is empty, the rest mix discretized Gaussians
// and random tables with in-range symbols and escapes up to the int32 limits.
std::vector<ConformanceVector> generate_conformance(std::size_t count, std::uint64_t seed);

}  // namespace hflic
