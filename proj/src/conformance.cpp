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

#include "hflic/conformance.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "hflic/errors.hpp"
#include "hflic/rng.hpp"

namespace hflic {

std::vector<CdfTable> ConformanceVector::symbol_tables() const {
  std::vector<CdfTable> out;
  out.reserve(table_index.size());
  for (std::uint16_t i : table_index) out.push_back(tables.at(i));
  return out;
}

namespace {

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
  using U = std::make_unsigned_t<T>;
  const U u = static_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

class Cursor {
 public:
  explicit Cursor(std::span<const std::uint8_t> b) : b_(b) {}

  template <class T>
  T get() {
    if (pos_ + sizeof(T) > b_.size()) throw ParseError("conformance: truncated at byte " + std::to_string(pos_));
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<U>(b_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  // Guards element counts against the bytes actually left.
  std::size_t count(std::size_t elem_bytes) {
    const std::uint32_t n = get<std::uint32_t>();
    if (static_cast<std::uint64_t>(n) * elem_bytes > b_.size() - pos_) {
      throw ParseError("conformance: count " + std::to_string(n) + " exceeds file size");
    }
    return n;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_conformance(std::span<const ConformanceVector> vectors) {
  std::vector<std::uint8_t> out(kConformanceMagic, kConformanceMagic + 4);
  put(out, kConformanceVersion);
  put(out, static_cast<std::uint32_t>(vectors.size()));
  for (const auto& v : vectors) {
    if (v.table_index.size() != v.symbols.size()) throw ConfigError("conformance: index/symbol count mismatch");
    put(out, static_cast<std::uint32_t>(v.tables.size()));
    for (const auto& t : v.tables) {
      put(out, t.offset);
      put(out, t.count);
      for (std::uint32_t c : t.cdf) put(out, c);
    }
    put(out, static_cast<std::uint32_t>(v.symbols.size()));
    for (std::uint16_t i : v.table_index) put(out, i);
    for (std::int32_t s : v.symbols) put(out, s);
    put(out, static_cast<std::uint32_t>(v.expected.size()));
    out.insert(out.end(), v.expected.begin(), v.expected.end());
  }
  put(out, static_cast<std::uint32_t>(crc32(0L, out.data(), static_cast<uInt>(out.size()))));
  return out;
}

std::vector<ConformanceVector> parse_conformance(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kConformanceMagic, 4) != 0) {
    throw ParseError("conformance: bad magic");
  }
  const std::size_t body = bytes.size() - 4;
  Cursor tail(bytes.subspan(body));
  const std::uint32_t stored = tail.get<std::uint32_t>();
  if (stored != static_cast<std::uint32_t>(crc32(0L, bytes.data(), static_cast<uInt>(body)))) {
    throw ParseError("conformance: CRC mismatch");
  }
  Cursor c(bytes.first(body));
  (void)c.get<std::uint32_t>();
  if (c.get<std::uint32_t>() != kConformanceVersion) throw ParseError("conformance: unsupported version");
  const std::size_t n = c.count(16);
  std::vector<ConformanceVector> out(n);
  for (auto& v : out) {
    v.tables.resize(c.count(20));
    for (auto& t : v.tables) {
      t.offset = c.get<std::int32_t>();
      t.count = c.get<std::int32_t>();
      if (t.count < 1 || t.count > (1 << 16)) throw ParseError("conformance: bad table size");
      t.cdf.resize(static_cast<std::size_t>(t.count) + 3);
      for (auto& x : t.cdf) x = c.get<std::uint32_t>();
      try {
        t.validate();
      } catch (const ConfigError& e) {
        throw ParseError(std::string("conformance: ") + e.what());
      }
    }
    const std::size_t ns = c.count(6);
    v.table_index.resize(ns);
    v.symbols.resize(ns);
    for (auto& i : v.table_index) {
      i = c.get<std::uint16_t>();
      if (i >= v.tables.size()) throw ParseError("conformance: table index out of range");
    }
    for (auto& s : v.symbols) s = c.get<std::int32_t>();
    v.expected.resize(c.count(1));
    for (auto& b : v.expected) b = c.get<std::uint8_t>();
  }
  if (c.pos() != body) throw ParseError("conformance: trailing bytes");
  return out;
}

namespace {

CdfTable random_table(Rng& rng) {
  switch (rng.below(4)) {
    case 0:
    case 1: {
      const double sigma = std::exp(rng.uniform(std::log(0.11), std::log(40.0)));
      return build_cdf(rng.uniform(-0.5, 0.5), sigma, 16 + static_cast<int>(rng.below(49)));
    }
    case 2: {
      const int count = 1 + static_cast<int>(rng.below(300));
      std::vector<double> p(count + 2);
      double total = 0.0;
      for (auto& x : p) total += (x = -std::log(1.0 - rng.uniform()));
      p.front() *= 0.01;
      p.back() *= 0.01;
      for (auto& x : p) x /= total;
      return quantize_cdf(p, static_cast<std::int32_t>(rng.below(401)) - 200);
    }
    default: {
      // Nearly deterministic: one dominant bin.
      const int count = 1 + static_cast<int>(rng.below(8));
      std::vector<double> p(count + 2, 1e-7);
      p[1 + rng.below(count)] = 1.0;
      return quantize_cdf(p, static_cast<std::int32_t>(rng.below(21)) - 10);
    }
  }
}

std::int32_t draw_symbol(const CdfTable& t, Rng& rng) {
  const std::uint32_t u = static_cast<std::uint32_t>(rng.below(kCdfTotal));
  int bin = 0;
  while (t.cdf[bin + 1] <= u) ++bin;
  const std::int64_t lo = t.offset, hi = static_cast<std::int64_t>(t.offset) + t.count - 1;
  const bool force_escape = rng.below(64) == 0;
  if (bin == 0 || bin == t.count + 1 || force_escape) {
    const bool below = bin == 0 || (force_escape && rng.below(2) == 0);
    std::int64_t excess;
    switch (rng.below(4)) {
      case 0: excess = 0; break;
      case 1: excess = static_cast<std::int64_t>(rng.below(64)); break;
      case 2: excess = static_cast<std::int64_t>(rng.below(1u << 20)); break;
      default: excess = std::numeric_limits<std::int64_t>::max(); break;
    }
    constexpr std::int64_t kMin = std::numeric_limits<std::int32_t>::min();
    constexpr std::int64_t kMax = std::numeric_limits<std::int32_t>::max();
    const std::int64_t v = below ? lo - 1 - std::min(excess, lo - 1 - kMin) : hi + 1 + std::min(excess, kMax - hi - 1);
    return static_cast<std::int32_t>(v);
  }
  return static_cast<std::int32_t>(lo + bin - 1);
}

}  // namespace

std::vector<ConformanceVector> generate_conformance(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ConformanceVector> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    ConformanceVector v;
    if (k > 0) {
      const std::size_t nt = 1 + rng.below(8);
      for (std::size_t i = 0; i < nt; ++i) v.tables.push_back(random_table(rng));
      const std::size_t ns = k < 8 ? k : static_cast<std::size_t>(std::exp(rng.uniform(0.0, std::log(1024.0))));
      for (std::size_t i = 0; i < ns; ++i) {
        const auto ti = static_cast<std::uint16_t>(rng.below(nt));
        v.table_index.push_back(ti);
        v.symbols.push_back(draw_symbol(v.tables[ti], rng));
      }
    } else {
      v.tables.push_back(build_cdf(0.0, 1.0, 16));
    }
    const auto tables = v.symbol_tables();
    v.expected = range_encode(v.symbols, tables);
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace hflic
