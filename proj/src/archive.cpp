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

#include "hflic/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "hflic/errors.hpp"

namespace hflic {

namespace {

constexpr char kArchiveMagic[4] = {'H', 'F', 'A', 'R'};
constexpr std::uint32_t kArchiveVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Cursor {
 public:
  explicit Cursor(std::span<const std::uint8_t> b) : b_(b) {}
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > b_.size() - pos_) throw ParseError("archive: unexpected end of data");
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t uint(int bytes) {
    auto s = take(bytes);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(s[i]) << (8 * i);
    return v;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor* TensorArchive::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

const Tensor& TensorArchive::get(const std::string& name, const Shape& shape) const {
  const Tensor* t = find(name);
  if (!t) throw ParseError("archive: missing tensor '" + name + "'");
  if (t->shape() != shape) {
    throw ParseError("archive: tensor '" + name + "' has shape " + t->shape().str() + ", expected " +
                     shape.str());
  }
  return *t;
}

std::vector<std::uint8_t> TensorArchive::serialize() const {
  std::vector<std::uint8_t> out(kArchiveMagic, kArchiveMagic + 4);
  put_u32(out, kArchiveVersion);
  put_u64(out, metadata.size());
  out.insert(out.end(), metadata.begin(), metadata.end());
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    const Shape s = t.shape();
    for (int d : {s.n, s.c, s.h, s.w}) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

TensorArchive TensorArchive::parse(std::span<const std::uint8_t> bytes) {
  Cursor cur(bytes);
  auto magic = cur.take(4);
  if (std::memcmp(magic.data(), kArchiveMagic, 4) != 0) throw ParseError("archive: bad magic");
  if (cur.uint(4) != kArchiveVersion) throw ParseError("archive: unsupported version");
  TensorArchive a;
  const auto meta = cur.take(cur.uint(8));
  a.metadata.assign(meta.begin(), meta.end());
  const std::uint64_t count = cur.uint(4);
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto name = cur.take(cur.uint(4));
    Shape s;
    s.n = static_cast<int>(cur.uint(4));
    s.c = static_cast<int>(cur.uint(4));
    s.h = static_cast<int>(cur.uint(4));
    s.w = static_cast<int>(cur.uint(4));
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0 || s.numel() > (bytes.size() / 8)) {
      throw ParseError("archive: implausible tensor shape");
    }
    Tensor t(s);
    for (double& v : t.values()) v = std::bit_cast<double>(cur.uint(8));
    a.tensors.emplace_back(std::string(name.begin(), name.end()), std::move(t));
  }
  if (!cur.done()) throw ParseError("archive: trailing bytes");
  return a;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

void TensorArchive::save(const std::filesystem::path& path) const {
  write_file_atomic(path, serialize());
}

TensorArchive TensorArchive::load(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace hflic
