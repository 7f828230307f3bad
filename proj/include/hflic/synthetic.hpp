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

#include "hflic/rng.hpp"
#include "hflic/tensor.hpp"

namespace hflic {

// Procedural test image in [0,1]: smooth colour field, flat ellipses and
// rectangles, and a little fine texture. Deterministic given the generator state.
Tensor synthetic_image(int h, int w, Rng& rng);

}  // namespace hflic
