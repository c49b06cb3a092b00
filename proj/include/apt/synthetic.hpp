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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "apt/image.hpp"
#include "apt/rng.hpp"

// Procedural test images with known structure.
namespace apt::synthetic {

inline float code(Rng& rng) { return static_cast<float>(rng.below(256)) / 255.0f; }

inline Image constant(int w, int h, int c, float v) { return Image(w, h, c, v); }

/// i.i.d. uniform 8-bit codes in every channel.
inline Image noise(int w, int h, int c, Rng& rng) {
  Image img(w, h, c);
  for (auto& v : img.data) v = code(rng);
  return img;
}

/// Left half constant `v`, right half uniform noise.
inline Image half_noise(int w, int h, int c, Rng& rng, float v = 0.5f) {
  Image img(w, h, c, v);
  for (int y = 0; y < h; ++y) {
    for (int x = w / 2; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) img.at(x, y, ch) = code(rng);
    }
  }
  return img;
}

inline Image horizontal_ramp(int w, int h, int c) {
  Image img(w, h, c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) img.at(x, y, ch) = w > 1 ? static_cast<float>(x) / static_cast<float>(w - 1) : 0.0f;
    }
  }
  return img;
}

/// Recursive mosaic: each square either becomes flat, noisy, a soft
/// gradient, or splits into four. Gives content at every scale.
inline Image mosaic(int w, int h, int c, Rng& rng, int min_side = 8) {
  Image img(w, h, c);
  auto fill = [&](auto&& self, int x0, int y0, int side) -> void {
    const double u = rng.uniform();
    if (side > min_side && u < 0.45) {
      const int half = side / 2;
      self(self, x0, y0, half);
      self(self, x0 + half, y0, half);
      self(self, x0, y0 + half, half);
      self(self, x0 + half, y0 + half, half);
      return;
    }
    const float base = code(rng);
    const float amp = static_cast<float>(rng.uniform(0.02, 0.6));
    const int kind = static_cast<int>(rng.below(3));
    for (int y = y0; y < std::min(y0 + side, h); ++y) {
      for (int x = x0; x < std::min(x0 + side, w); ++x) {
        for (int ch = 0; ch < c; ++ch) {
          float v = base;
          if (kind == 1) v = base + amp * (code(rng) - 0.5f);
          if (kind == 2) v = base + amp * (static_cast<float>(x - x0 + y - y0) / static_cast<float>(2 * side) - 0.5f);
          img.at(x, y, ch) = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f) / 255.0f;
        }
      }
    }
  };
  int side = 1;
  while (side < std::max(w, h)) side *= 2;
  fill(fill, 0, 0, side);
  return img;
}

}  // namespace apt::synthetic
