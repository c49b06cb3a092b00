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

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "apt/error.hpp"
#include "apt/image.hpp"

namespace apt {

enum class ScorerKind { Entropy, Laplacian, Upsampling };

inline std::string_view scorer_name(ScorerKind k) {
  switch (k) {
    case ScorerKind::Entropy: return "entropy";
    case ScorerKind::Laplacian: return "laplacian";
    case ScorerKind::Upsampling: return "upsampling";
  }
  return "entropy";
}

inline ScorerKind parse_scorer(std::string_view name) {
  if (name == "entropy") return ScorerKind::Entropy;
  if (name == "laplacian") return ScorerKind::Laplacian;
  if (name == "upsampling") return ScorerKind::Upsampling;
  fail(Errc::InvalidConfig, "scorer: unknown kind '" + std::string(name) + "'");
}

struct ScorerConfig {
  ScorerKind kind = ScorerKind::Entropy;
  int bins = 256;  // log base is fixed at 2

  friend bool operator==(const ScorerConfig&, const ScorerConfig&) = default;
};

/// Bits for entropy, mean |response| for Laplacian, MSE for upsampling.
struct RegionScore {
  double value = 0.0;
};

namespace detail {

inline void require_scorable(const ImageView& region) {
  require(region.image != nullptr && region.image->channels == 1, Errc::DimensionMismatch,
          "scorers operate on single-channel regions");
  require(region.pixel_count() > 0, Errc::EmptyRegion, "region has no pixels");
}

}  // namespace detail

/// Index of the histogram bin an intensity in [0, 1] falls into. With 256
/// bins this recovers the original 8-bit code.
inline int intensity_bin(float v, int bins) {
  const double scaled = std::floor(static_cast<double>(v) * (bins - 1) + 0.5);
  return std::clamp(static_cast<int>(scaled), 0, bins - 1);
}

/// Shannon entropy (base 2) of the binned intensity histogram.
inline RegionScore entropy(const ImageView& region, const ScorerConfig& cfg = {}) {
  detail::require_scorable(region);
  require(cfg.bins >= 2, Errc::InvalidConfig, "bins must be >= 2");
  std::vector<std::uint32_t> hist(static_cast<std::size_t>(cfg.bins), 0);
  for (int y = 0; y < region.height; ++y) {
    for (int x = 0; x < region.width; ++x) ++hist[static_cast<std::size_t>(intensity_bin(region(x, y), cfg.bins))];
  }
  const double n = static_cast<double>(region.pixel_count());
  double h = 0.0;
  for (std::uint32_t count : hist) {
    if (count == 0) continue;
    const double p = count / n;
    h -= p * std::log2(p);
  }
  return {h > 0.0 ? h : 0.0};
}

/// Mean absolute 4-neighbour Laplacian over interior pixels; regions
/// narrower than 3 pixels score 0.
inline RegionScore laplacian_score(const ImageView& region, const ScorerConfig& = {}) {
  detail::require_scorable(region);
  if (region.width < 3 || region.height < 3) return {0.0};
  double sum = 0.0;
  for (int y = 1; y + 1 < region.height; ++y) {
    for (int x = 1; x + 1 < region.width; ++x) {
      const double r = static_cast<double>(region(x, y - 1)) + region(x, y + 1) + region(x - 1, y) +
                       region(x + 1, y) - 4.0 * region(x, y);
      sum += std::abs(r);
    }
  }
  return {sum / (static_cast<double>(region.width - 2) * (region.height - 2))};
}

/// Reconstruction error after a bilinear round trip through a grid 2^scale
/// times coarser.
inline RegionScore upsampling_score(const ImageView& region, int scale) {
  detail::require_scorable(region);
  require(scale >= 1, Errc::InvalidDimensions, "upsampling scale index must be >= 1");
  const int factor = 1 << scale;
  require(region.width % factor == 0 && region.height % factor == 0, Errc::IndivisibleRegion,
          "region side must be divisible by 2^scale");
  const Image patch = crop(region);
  const Image down = resize_bilinear(patch, region.width / factor, region.height / factor);
  const Image up = resize_bilinear(down, region.width, region.height);
  double sum = 0.0;
  for (std::size_t i = 0; i < patch.data.size(); ++i) {
    const double d = static_cast<double>(patch.data[i]) - up.data[i];
    sum += d * d;
  }
  return {sum / static_cast<double>(patch.data.size())};
}

/// Scores a candidate cell of the given scale with the configured scorer.
inline RegionScore score_region(const ImageView& region, const ScorerConfig& cfg, int scale) {
  switch (cfg.kind) {
    case ScorerKind::Entropy: return entropy(region, cfg);
    case ScorerKind::Laplacian: return laplacian_score(region, cfg);
    case ScorerKind::Upsampling: return upsampling_score(region, scale);
  }
  return entropy(region, cfg);
}

/// Upper bound of the scorer's range on [0, 1] intensities.
inline double scorer_upper_bound(const ScorerConfig& cfg) {
  switch (cfg.kind) {
    case ScorerKind::Entropy: return std::log2(static_cast<double>(cfg.bins));
    case ScorerKind::Laplacian: return 4.0;
    case ScorerKind::Upsampling: return 1.0;
  }
  return 1.0;
}

}  // namespace apt
