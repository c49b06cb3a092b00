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
#include <iostream>
#include <span>
#include <string>
#include <vector>

#include "apt/config.hpp"
#include "apt/embedding.hpp"
#include "apt/image.hpp"
#include "apt/packing.hpp"
#include "apt/quadtree.hpp"
#include "apt/toyvit.hpp"

namespace apt {

struct PreparedImage {
  Image image;
  int source_w = 0;
  int source_h = 0;
  bool resized = false;
};

/// Resizes to the nearest multiple of the base patch (or of the window, when
/// window attention is on), shrinking further if the result would not fit
/// the positional table.
inline PreparedImage prepare_image(const Image& img, const RunConfig& cfg) {
  validate(img);
  const int unit = cfg.window_side > 0 ? cfg.window_side : cfg.base_patch;
  auto nearest = [unit](double v) { return std::max(unit, static_cast<int>(std::lround(v / unit)) * unit); };
  int w = nearest(img.width);
  int h = nearest(img.height);
  const int limit = cfg.pos_grid * cfg.base_patch;
  if (w > limit || h > limit) {
    const double s = std::min(static_cast<double>(limit) / w, static_cast<double>(limit) / h);
    w = std::max(unit, static_cast<int>(std::floor(w * s / unit)) * unit);
    h = std::max(unit, static_cast<int>(std::floor(h * s / unit)) * unit);
  }
  PreparedImage out{img, img.width, img.height, false};
  if (w != img.width || h != img.height) {
    out.image = resize_bilinear(img, w, h);
    out.resized = true;
  }
  return out;
}

/// Content hash of the 8-bit pixel codes; identical images get identical
/// ids, which keeps RandomDrop reproducible across batch compositions.
inline std::uint64_t image_id(const Image& img) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  };
  mix(static_cast<std::uint64_t>(img.width));
  mix(static_cast<std::uint64_t>(img.height));
  mix(static_cast<std::uint64_t>(img.channels));
  for (float v : img.data) mix(static_cast<std::uint64_t>(std::lround(v * 255.0f)));
  return h;
}

inline Image to_rgb(const Image& img) {
  if (img.channels == 3) return img;
  Image out(img.width, img.height, 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = img.data[i];
  }
  return out;
}

struct ForwardResult {
  std::vector<std::vector<float>> pooled;
  std::vector<std::size_t> token_counts;
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> blocks;
  double estimated_flops = 0.0;
};

/// patchify -> embed -> pack -> encoder -> unpack -> pool, with weights
/// derived from the config seed.
class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg)
      : cfg_((validate(cfg), std::move(cfg))),
        embed_cfg_(cfg_.embed(3)),
        embed_params_(init_params<float>(embed_cfg_)),
        vit_params_(init_vit<float>(cfg_.vit())) {}

  const RunConfig& config() const { return cfg_; }
  const EmbedConfig& embed_config() const { return embed_cfg_; }
  const EmbedParams<float>& embed_params() const { return embed_params_; }
  const ToyViTParams<float>& vit_params() const { return vit_params_; }

  PatchAssignment patchify(const Image& prepared) const { return assign_patches(prepared, cfg_.policy()); }

  TokenSequence<float> embed(const Image& prepared, const PatchAssignment& a) const {
    const Image rgb = to_rgb(prepared);
    return embed_image(rgb, a, embed_params_, embed_cfg_, image_id(prepared));
  }

  PackedBatch<float> pack_batch(const std::vector<TokenSequence<float>>& seqs,
                                const std::vector<PatchAssignment>& assignments) const {
    if (cfg_.window_side <= 0) return pack(seqs);
    require(cfg_.mode != EmbedMode::RandomDrop, Errc::InvalidConfig,
            "window attention needs a tiling assignment; mode=random does not provide one");
    std::vector<WindowPartition> parts;
    for (const auto& a : assignments) parts.push_back(partition_windows(a, cfg_.window_side, cfg_.max_patch_side()));
    return pack_windowed(std::span<const TokenSequence<float>>(seqs), std::span<const WindowPartition>(parts));
  }

  ForwardResult forward(const std::vector<Image>& prepared) const {
    require(!prepared.empty(), Errc::EmptyBatch, "forward needs at least one image");
    std::vector<PatchAssignment> assignments;
    std::vector<TokenSequence<float>> seqs;
    for (const auto& img : prepared) {
      assignments.push_back(patchify(img));
      seqs.push_back(embed(img, assignments.back()));
    }
    const PackedBatch<float> batch = pack_batch(seqs, assignments);
    const Matrix<float> out = apt::forward(batch, vit_params_);
    ForwardResult r;
    for (const auto& piece : unpack(batch, out)) {
      r.pooled.push_back(pool(piece));
      r.token_counts.push_back(piece.rows());
      r.estimated_flops += estimate_flops(piece.rows(), cfg_.vit());
    }
    r.offsets = batch.offsets;
    r.blocks = batch.blocks;
    return r;
  }

 private:
  RunConfig cfg_;
  EmbedConfig embed_cfg_;
  EmbedParams<float> embed_params_;
  ToyViTParams<float> vit_params_;
};

}  // namespace apt
