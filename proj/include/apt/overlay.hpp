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

#include <array>
#include <cstddef>

#include "apt/image.hpp"
#include "apt/quadtree.hpp"

namespace apt {

using Rgb8 = std::array<unsigned char, 3>;

/// Stroke colour for a scale; cycles past the sixth scale.
inline Rgb8 scale_color(int scale) {
  static constexpr std::array<Rgb8, 6> kPalette{{
      {255, 48, 48},   // 0
      {48, 220, 48},   // 1
      {48, 96, 255},   // 2
      {255, 220, 0},   // 3
      {255, 0, 255},   // 4
      {0, 230, 230},   // 5
  }};
  return kPalette[static_cast<std::size_t>(scale) % kPalette.size()];
}

/// RGB copy of `img` with each cell's 1-px perimeter (drawn inside the
/// cell) painted in its scale colour.
inline Image render_overlay(const Image& img, const PatchAssignment& a) {
  Image out(img.width, img.height, 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) {
      out.data[3 * i + static_cast<std::size_t>(c)] =
          img.channels == 3 ? img.data[3 * i + static_cast<std::size_t>(c)] : img.data[i];
    }
  }
  for (const auto& cell : a.cells) {
    const int side = a.side(cell);
    const Rgb8 col = scale_color(cell.scale);
    auto paint = [&](int x, int y) {
      if (x < 0 || y < 0 || x >= out.width || y >= out.height) return;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = static_cast<float>(col[static_cast<std::size_t>(c)]) / 255.0f;
    };
    for (int k = 0; k < side; ++k) {
      paint(cell.x + k, cell.y);
      paint(cell.x + k, cell.y + side - 1);
      paint(cell.x, cell.y + k);
      paint(cell.x + side - 1, cell.y + k);
    }
  }
  return out;
}

}  // namespace apt
