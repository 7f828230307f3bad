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

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hflic/archive.hpp"
#include "hflic/conformance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Writes range-coder conformance vectors produced by the reference coder"};
  std::string out;
  std::size_t count = 1000;
  std::uint64_t seed = 20260101;
  app.add_option("out", out, "Output fixture path")->required();
  app.add_option("--count", count, "Number of vectors");
  app.add_option("--seed", seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);
  try {
    const auto vectors = hflic::generate_conformance(count, seed);
    const auto bytes = hflic::serialize_conformance(vectors);
    hflic::write_file_atomic(out, bytes);
    std::size_t symbols = 0;
    for (const auto& v : vectors) symbols += v.symbols.size();
    std::cout << vectors.size() << " vectors, " << symbols << " symbols, " << bytes.size() << " bytes\n";
  } catch (const std::exception& e) {
    std::cerr << "make_conformance: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
