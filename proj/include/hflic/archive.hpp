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
#include <string>
#include <utility>
#include <vector>

#include "hflic/tensor.hpp"

namespace hflic {

// Named float64 tensors plus a JSON metadata record; see docs/formats.md.
struct TensorArchive {
  std::string metadata = "{}";
  std::vector<std::pair<std::string, Tensor>> tensors;

  void add(std::string name, Tensor t) { tensors.emplace_back(std::move(name), std::move(t)); }
  const Tensor* find(const std::string& name) const;
  // Throws ParseError when missing or of a different shape.
  const Tensor& get(const std::string& name, const Shape& shape) const;

  std::vector<std::uint8_t> serialize() const;
  static TensorArchive parse(std::span<const std::uint8_t> bytes);

  // Atomic: writes a sibling temp file, then renames.
  void save(const std::filesystem::path& path) const;
  static TensorArchive load(const std::filesystem::path& path);
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace hflic
