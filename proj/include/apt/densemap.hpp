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
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "apt/error.hpp"
#include "apt/quadtree.hpp"
#include "apt/tensor.hpp"

namespace apt {

/// Base-resolution feature grid, row-major over (grid_h, grid_w).
template <typename T>
struct FeatureMap {
  int grid_w = 0;
  int grid_h = 0;
  Matrix<T> features;  // (grid_h * grid_w) x d

  std::span<const T> at(int gx, int gy) const {
    return features.row(static_cast<std::size_t>(gy) * static_cast<std::size_t>(grid_w) + static_cast<std::size_t>(gx));
  }
};

/// Broadcasts each scale-s token over the 2^s x 2^s base cells it covers.
/// `tokens` rows must be in the assignment's scan order.
template <typename T>
FeatureMap<T> reconstruct(const Matrix<T>& tokens, const PatchAssignment& a) {
  require(tokens.rows() == a.cells.size(), Errc::CountMismatch,
          "token count " + std::to_string(tokens.rows()) + " != cell count " + std::to_string(a.cells.size()));
  FeatureMap<T> map{a.grid_w(), a.grid_h(), Matrix<T>(a.base_tokens(), tokens.cols())};
  std::vector<int> writes(a.base_tokens(), 0);
  const int p = a.base_patch;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const Cell& c = a.cells[i];
    const int n = 1 << c.scale;
    const int gx0 = c.x / p;
    const int gy0 = c.y / p;
    require(gx0 + n <= map.grid_w && gy0 + n <= map.grid_h, Errc::InvariantViolation, "cell outside base grid");
    const auto src = tokens.row(i);
    for (int gy = gy0; gy < gy0 + n; ++gy) {
      for (int gx = gx0; gx < gx0 + n; ++gx) {
        const std::size_t idx = static_cast<std::size_t>(gy) * static_cast<std::size_t>(map.grid_w) + static_cast<std::size_t>(gx);
        ++writes[idx];
        std::copy(src.begin(), src.end(), map.features.row(idx).begin());
      }
    }
  }
  for (int w : writes) {
    require(w == 1, Errc::InvariantViolation, w == 0 ? "base cell never written" : "base cell written twice");
  }
  return map;
}

}  // namespace apt
