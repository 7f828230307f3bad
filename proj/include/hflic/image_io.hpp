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

#include <filesystem>
#include <string>
#include <vector>

#include "hflic/tensor.hpp"

namespace hflic {

// 8/16-bit gray, gray+alpha, RGB or RGBA PNG -> (1,3,H,W) in [0,1]. Alpha is dropped.
Tensor read_png(const std::filesystem::path& path);
// Rounds to 8-bit RGB.
void write_png(const std::filesystem::path& path, const Tensor& image);
// Sorted *.png files directly inside `dir`.
std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir);
// Rounds to the 8-bit grid (what a PNG round trip produces).
Tensor quantize_8bit(const Tensor& image);

}  // namespace hflic
