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
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "apt/error.hpp"
#include "apt/image.hpp"
#include "apt/scoring.hpp"

namespace apt {

/// thresholds[s - 1] is the cutoff for scale s (cell side 2^s * base_patch),
/// so {5.5, 4.0} means 5.5 for 2p cells and 4.0 for 4p cells.
struct PatchPolicyConfig {
  int base_patch = 16;
  int num_scales = 3;
  std::vector<double> thresholds{5.5, 4.0};
  ScorerConfig scorer{};

  int cell_side(int scale) const { return base_patch << scale; }
  int max_side() const { return cell_side(num_scales - 1); }
  double threshold(int scale) const { return thresholds[static_cast<std::size_t>(scale - 1)]; }
};

inline void validate(const PatchPolicyConfig& cfg) {
  require(cfg.base_patch >= 1, Errc::InvalidConfig, "base_patch must be >= 1");
  require(cfg.num_scales >= 1 && cfg.num_scales <= 16, Errc::InvalidConfig, "num_scales must be in [1, 16]");
  require(cfg.thresholds.size() == static_cast<std::size_t>(cfg.num_scales - 1), Errc::InvalidConfig,
          "thresholds must have num_scales - 1 entries");
  require(cfg.scorer.bins >= 2, Errc::InvalidConfig, "bins must be >= 2");
}

struct Cell {
  int x = 0;
  int y = 0;
  int scale = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

struct PatchAssignment {
  int image_w = 0;
  int image_h = 0;
  int base_patch = 0;
  std::vector<Cell> cells;  // scan order: row-major by top-left corner

  int side(const Cell& c) const { return base_patch << c.scale; }
  int grid_w() const { return image_w / base_patch; }
  int grid_h() const { return image_h / base_patch; }
  std::size_t base_tokens() const {
    return static_cast<std::size_t>(grid_w()) * static_cast<std::size_t>(grid_h());
  }

  friend bool operator==(const PatchAssignment&, const PatchAssignment&) = default;
};

inline std::size_t token_count(const PatchAssignment& a) { return a.cells.size(); }

inline double reduction_ratio(const PatchAssignment& a) {
  const auto base = a.base_tokens();
  return base == 0 ? 0.0 : 1.0 - static_cast<double>(token_count(a)) / static_cast<double>(base);
}

inline void sort_scan_order(std::vector<Cell>& cells) {
  std::sort(cells.begin(), cells.end(),
            [](const Cell& a, const Cell& b) { return std::tie(a.y, a.x) < std::tie(b.y, b.x); });
}

/// Hierarchical coarse-to-fine thresholding. For each scale from the
/// coarsest down to 1, every grid-aligned square that lies fully inside the
/// image and is not yet claimed is kept iff its score is strictly below that
/// scale's threshold. Whatever is left becomes base-size cells.
inline PatchAssignment assign_patches(const Image& img, const PatchPolicyConfig& cfg) {
  validate(cfg);
  const int p = cfg.base_patch;
  require(img.width % p == 0 && img.height % p == 0, Errc::IndivisibleImage,
          "image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
              " is not a multiple of the base patch " + std::to_string(p));
  const Image gray = to_grayscale(img);
  const int gw = img.width / p;
  const int gh = img.height / p;
  std::vector<char> claimed(static_cast<std::size_t>(gw) * static_cast<std::size_t>(gh), 0);
  auto claimed_at = [&](int gx, int gy) -> char& {
    return claimed[static_cast<std::size_t>(gy) * static_cast<std::size_t>(gw) + static_cast<std::size_t>(gx)];
  };

  PatchAssignment out{img.width, img.height, p, {}};
  for (int s = cfg.num_scales - 1; s >= 1; --s) {
    const int side = cfg.cell_side(s);
    const int span = 1 << s;
    const double tau = cfg.threshold(s);
    for (int y = 0; y + side <= img.height; y += side) {
      for (int x = 0; x + side <= img.width; x += side) {
        // Claimed coarser cells are aligned supersets, so the corner decides.
        if (claimed_at(x / p, y / p)) continue;
        const double score = score_region(ImageView(gray, x, y, side, side), cfg.scorer, s).value;
        if (!(score < tau)) continue;
        out.cells.push_back({x, y, s});
        for (int dy = 0; dy < span; ++dy) {
          for (int dx = 0; dx < span; ++dx) claimed_at(x / p + dx, y / p + dy) = 1;
        }
      }
    }
  }
  for (int gy = 0; gy < gh; ++gy) {
    for (int gx = 0; gx < gw; ++gx) {
      if (!claimed_at(gx, gy)) out.cells.push_back({gx * p, gy * p, 0});
    }
  }
  sort_scan_order(out.cells);
  return out;
}

/// All base-size cells; the no-reduction tiling.
inline PatchAssignment uniform_assignment(int image_w, int image_h, int base_patch) {
  require(base_patch >= 1 && image_w % base_patch == 0 && image_h % base_patch == 0, Errc::IndivisibleImage,
          "image is not a multiple of the base patch");
  PatchAssignment out{image_w, image_h, base_patch, {}};
  for (int y = 0; y < image_h; y += base_patch) {
    for (int x = 0; x < image_w; x += base_patch) out.cells.push_back({x, y, 0});
  }
  return out;
}

inline nlohmann::ordered_json to_json(const PatchAssignment& a) {
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& c : a.cells) {
    nlohmann::ordered_json cell;
    cell["x"] = c.x;
    cell["y"] = c.y;
    cell["s"] = c.scale;
    cells.push_back(std::move(cell));
  }
  nlohmann::ordered_json j;
  j["w"] = a.image_w;
  j["h"] = a.image_h;
  j["p"] = a.base_patch;
  j["cells"] = std::move(cells);
  return j;
}

inline PatchAssignment assignment_from_json(const nlohmann::json& j) {
  PatchAssignment a;
  try {
    a.image_w = j.at("w").get<int>();
    a.image_h = j.at("h").get<int>();
    a.base_patch = j.at("p").get<int>();
    for (const auto& c : j.at("cells")) a.cells.push_back({c.at("x").get<int>(), c.at("y").get<int>(), c.at("s").get<int>()});
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::CorruptData, std::string("assignment json: ") + e.what());
  }
  return a;
}

/// Structural check: cells in bounds, aligned, disjoint, covering the
/// base grid. Throws InvariantViolation with the first problem found.
inline void check_tiling(const PatchAssignment& a) {
  const int p = a.base_patch;
  require(p >= 1, Errc::InvariantViolation, "base patch must be positive");
  const int gw = a.grid_w();
  const int gh = a.grid_h();
  std::vector<int> writes(static_cast<std::size_t>(gw) * static_cast<std::size_t>(gh), 0);
  for (const auto& c : a.cells) {
    const int side = a.side(c);
    require(c.scale >= 0 && c.x >= 0 && c.y >= 0 && c.x + side <= a.image_w && c.y + side <= a.image_h,
            Errc::InvariantViolation, "cell outside image");
    require(c.x % side == 0 && c.y % side == 0, Errc::InvariantViolation, "cell not quadtree aligned");
    for (int gy = c.y / p; gy < (c.y + side) / p; ++gy) {
      for (int gx = c.x / p; gx < (c.x + side) / p; ++gx) {
        ++writes[static_cast<std::size_t>(gy) * static_cast<std::size_t>(gw) + static_cast<std::size_t>(gx)];
      }
    }
  }
  for (int w : writes) require(w == 1, Errc::InvariantViolation, w == 0 ? "uncovered base cell" : "overlapping cells");
}

}  // namespace apt
