// Copyright 2026 The APT Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Tokenizes a synthetic image under the default profile and prints the
// token budget next to the uniform grid, then runs the packed encoder on a
// two-image batch.

#include <iostream>

#include "apt/apt.hpp"

int main() {
  apt::RunConfig cfg;
  cfg.d_embed = 64;
  cfg.depth = 2;

  apt::Rng rng(7);
  const apt::Image flat = apt::synthetic::constant(224, 224, 3, 0.4f);
  const apt::Image busy = apt::synthetic::mosaic(224, 224, 3, rng, 16);

  const apt::Pipeline pipe(cfg);
  for (const auto* img : {&flat, &busy}) {
    const auto a = pipe.patchify(*img);
    std::cout << "tokens " << apt::token_count(a) << " / " << a.base_tokens() << "  (reduction "
              << apt::reduction_ratio(a) * 100.0 << "%)\n";
  }

  const auto r = pipe.forward({flat, busy});
  std::cout << "packed offsets:";
  for (auto o : r.offsets) std::cout << ' ' << o;
  std::cout << "\nestimated encoder cost: " << r.estimated_flops / 1e9 << " GMAC\n";
  return 0;
}
