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
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "apt/error.hpp"
#include "apt/image.hpp"
#include "apt/quadtree.hpp"
#include "apt/rng.hpp"
#include "apt/tensor.hpp"

namespace apt {

enum class EmbedMode { APT, ResizeOnly, RandomDrop };

inline std::string_view mode_name(EmbedMode m) {
  switch (m) {
    case EmbedMode::APT: return "apt";
    case EmbedMode::ResizeOnly: return "resize";
    case EmbedMode::RandomDrop: return "random";
  }
  return "apt";
}

inline EmbedMode parse_mode(std::string_view name) {
  if (name == "apt") return EmbedMode::APT;
  if (name == "resize") return EmbedMode::ResizeOnly;
  if (name == "random") return EmbedMode::RandomDrop;
  fail(Errc::InvalidConfig, "mode: unknown '" + std::string(name) + "'");
}

struct EmbedConfig {
  int d_embed = 192;
  int base_patch = 16;
  int channels = 3;
  int num_scales = 3;
  // Size of the learned positional table in base-grid cells; images whose
  // base grid exceeds it cannot be embedded.
  int pos_grid_w = 64;
  int pos_grid_h = 64;
  EmbedMode mode = EmbedMode::APT;
  std::uint64_t seed = 0;

  std::size_t patch_dim() const {
    return static_cast<std::size_t>(base_patch) * static_cast<std::size_t>(base_patch) *
           static_cast<std::size_t>(channels);
  }
};

inline void validate(const EmbedConfig& cfg) {
  require(cfg.d_embed >= 1, Errc::InvalidConfig, "d_embed must be >= 1");
  require(cfg.base_patch >= 1, Errc::InvalidConfig, "base_patch must be >= 1");
  require(cfg.channels == 1 || cfg.channels == 3, Errc::InvalidConfig, "channels must be 1 or 3");
  require(cfg.num_scales >= 1, Errc::InvalidConfig, "num_scales must be >= 1");
  require(cfg.pos_grid_w >= 1 && cfg.pos_grid_h >= 1, Errc::InvalidConfig, "positional grid must be non-empty");
}

/// Depthwise 2x2 stride-2 reducer: out[c] = b[c] + sum_t w[c][t] * in_t[c],
/// taps t = dy * 2 + dx.
template <typename T>
struct ConvStage {
  Matrix<T> weight;  // d_embed x 4
  std::vector<T> bias;
};

template <typename T>
struct EmbedParams {
  Linear<T> patch;                   // shared patch embedding, (p*p*C) -> d
  std::vector<ConvStage<T>> conv;    // conv[k] reduces a 2^(k+1) grid to 2^k
  Linear<T> zero_mlp;                // d -> d, zero at init
  Matrix<T> pos;                     // (pos_grid_h * pos_grid_w) x d
};

/// Visits every tensor as (name, flat data, shape); used for serialization
/// and gradient checks.
template <typename T, typename F>
void for_each_embed_tensor(EmbedParams<T>& p, F&& f) {
  f(std::string("patch.weight"), p.patch.weight.flat(), std::vector<std::size_t>{p.patch.weight.rows(), p.patch.weight.cols()});
  f(std::string("patch.bias"), std::span<T>(p.patch.bias), std::vector<std::size_t>{p.patch.bias.size()});
  for (std::size_t k = 0; k < p.conv.size(); ++k) {
    auto& st = p.conv[k];
    f("conv." + std::to_string(k) + ".weight", st.weight.flat(), std::vector<std::size_t>{st.weight.rows(), 2, 2});
    f("conv." + std::to_string(k) + ".bias", std::span<T>(st.bias), std::vector<std::size_t>{st.bias.size()});
  }
  f(std::string("zero_mlp.weight"), p.zero_mlp.weight.flat(),
    std::vector<std::size_t>{p.zero_mlp.weight.rows(), p.zero_mlp.weight.cols()});
  f(std::string("zero_mlp.bias"), std::span<T>(p.zero_mlp.bias), std::vector<std::size_t>{p.zero_mlp.bias.size()});
  f(std::string("pos"), p.pos.flat(), std::vector<std::size_t>{p.pos.rows(), p.pos.cols()});
}

template <typename T, typename F>
void for_each_embed_tensor(const EmbedParams<T>& p, F&& f) {
  for_each_embed_tensor(const_cast<EmbedParams<T>&>(p),
                        [&](const std::string& name, std::span<T> data, const std::vector<std::size_t>& shape) {
                          f(name, std::span<const T>(data), shape);
                        });
}

namespace detail {

inline void fill_uniform(Rng& rng, std::span<float> out, double fan_in) {
  const double k = 1.0 / std::sqrt(fan_in);
  for (auto& v : out) v = static_cast<float>(rng.uniform(-k, k));
}

}  // namespace detail

/// Seeded init: everything uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) except
/// the zero MLP, which starts at exactly zero. Values are drawn in float
/// so that float and double instantiations start from the same numbers.
template <typename T = float>
EmbedParams<T> init_params(const EmbedConfig& cfg) {
  validate(cfg);
  const auto d = static_cast<std::size_t>(cfg.d_embed);
  Rng rng(mix_seed(cfg.seed, 0xE3BEDull));

  EmbedParams<float> p;
  p.patch = Linear<float>(cfg.patch_dim(), d);
  detail::fill_uniform(rng, p.patch.weight.flat(), static_cast<double>(cfg.patch_dim()));
  detail::fill_uniform(rng, p.patch.bias, static_cast<double>(cfg.patch_dim()));
  for (int k = 0; k + 1 < cfg.num_scales; ++k) {
    ConvStage<float> st{Matrix<float>(d, 4), std::vector<float>(d)};
    detail::fill_uniform(rng, st.weight.flat(), 4.0);
    detail::fill_uniform(rng, st.bias, 4.0);
    p.conv.push_back(std::move(st));
  }
  p.zero_mlp = Linear<float>(d, d);
  p.pos = Matrix<float>(static_cast<std::size_t>(cfg.pos_grid_w) * static_cast<std::size_t>(cfg.pos_grid_h), d);
  detail::fill_uniform(rng, p.pos.flat(), static_cast<double>(d));

  if constexpr (std::is_same_v<T, float>) {
    return p;
  } else {
    EmbedParams<T> out;
    out.patch = linear_cast<T>(p.patch);
    for (const auto& st : p.conv) {
      out.conv.push_back({matrix_cast<T>(st.weight), std::vector<T>(st.bias.begin(), st.bias.end())});
    }
    out.zero_mlp = linear_cast<T>(p.zero_mlp);
    out.pos = matrix_cast<T>(p.pos);
    return out;
  }
}

template <typename T>
EmbedParams<T> zeros_like(const EmbedParams<T>& p) {
  EmbedParams<T> z = p;
  for_each_embed_tensor(z, [](const std::string&, std::span<T> data, const auto&) {
    std::fill(data.begin(), data.end(), T{});
  });
  return z;
}

template <typename T>
struct TokenSequence {
  Matrix<T> tokens;         // one row per token
  std::vector<Cell> meta;   // cell each token came from, same order
  std::uint64_t source = 0;
};

namespace detail {

template <typename T>
std::vector<T> flatten_patch(const Image& img, int x0, int y0, int p) {
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(p) * static_cast<std::size_t>(p) * static_cast<std::size_t>(img.channels));
  for (int y = y0; y < y0 + p; ++y) {
    for (int x = x0; x < x0 + p; ++x) {
      for (int c = 0; c < img.channels; ++c) out.push_back(static_cast<T>(img.at(x, y, c)));
    }
  }
  return out;
}

// Inputs of one conv stage for each level, finest first; the last entry is
// the single aggregated vector.
template <typename T>
std::vector<Matrix<T>> aggregate_levels(const Matrix<T>& sub, int scale, const EmbedParams<T>& params) {
  std::vector<Matrix<T>> levels{sub};
  const std::size_t d = sub.cols();
  for (int k = scale - 1; k >= 0; --k) {
    const Matrix<T>& in = levels.back();
    const std::size_t n_in = std::size_t{2} << k;
    const std::size_t n_out = n_in / 2;
    const auto& st = params.conv[static_cast<std::size_t>(k)];
    Matrix<T> out(n_out * n_out, d);
    for (std::size_t oy = 0; oy < n_out; ++oy) {
      for (std::size_t ox = 0; ox < n_out; ++ox) {
        auto dst = out.row(oy * n_out + ox);
        for (std::size_t c = 0; c < d; ++c) dst[c] = st.bias[c];
        for (std::size_t t = 0; t < 4; ++t) {
          const auto src = in.row((2 * oy + t / 2) * n_in + 2 * ox + t % 2);
          for (std::size_t c = 0; c < d; ++c) dst[c] += st.weight(c, t) * src[c];
        }
      }
    }
    levels.push_back(std::move(out));
  }
  return levels;
}

inline void require_cell(const Image& img, const Cell& cell, const EmbedConfig& cfg) {
  const int side = cfg.base_patch << cell.scale;
  require(cell.scale >= 0 && cell.scale < cfg.num_scales, Errc::CellOutOfBounds, "cell scale out of range");
  require(cell.x >= 0 && cell.y >= 0 && cell.x + side <= img.width && cell.y + side <= img.height,
          Errc::CellOutOfBounds, "cell outside image");
  const int gx = cell.x / cfg.base_patch;
  const int gy = cell.y / cfg.base_patch;
  require(gx + (1 << cell.scale) <= cfg.pos_grid_w && gy + (1 << cell.scale) <= cfg.pos_grid_h,
          Errc::CellOutOfBounds, "cell outside positional table");
  require(img.channels == cfg.channels, Errc::DimensionMismatch, "image channels do not match embed config");
}

template <typename T>
std::vector<T> resized_patch(const Image& img, const Cell& cell, int p) {
  const int side = p << cell.scale;
  if (cell.scale == 0) return flatten_patch<T>(img, cell.x, cell.y, p);
  return flatten_patch<T>(resize_bilinear(crop(img, cell.x, cell.y, side, side), p, p), 0, 0, p);
}

template <typename T>
Matrix<T> sub_patch_inputs(const Image& img, const Cell& cell, int p) {
  const std::size_t n = std::size_t{1} << cell.scale;
  Matrix<T> out(n * n, static_cast<std::size_t>(p) * static_cast<std::size_t>(p) * static_cast<std::size_t>(img.channels));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = flatten_patch<T>(img, cell.x + static_cast<int>(i) * p, cell.y + static_cast<int>(j) * p, p);
      std::copy(v.begin(), v.end(), out.row(j * n + i).begin());
    }
  }
  return out;
}

template <typename F>
void for_each_covered_pos(const Cell& cell, const EmbedConfig& cfg, F&& f) {
  const int n = 1 << cell.scale;
  const int gx = cell.x / cfg.base_patch;
  const int gy = cell.y / cfg.base_patch;
  for (int dy = 0; dy < n; ++dy) {
    for (int dx = 0; dx < n; ++dx) {
      f(static_cast<std::size_t>(gy + dy) * static_cast<std::size_t>(cfg.pos_grid_w) + static_cast<std::size_t>(gx + dx));
    }
  }
}

}  // namespace detail

/// Token for one cell:
///   E(Resize_p(cell)) + ZeroMLP(Conv^(s)({E(sub-patch)})) + mean(pos over cell)
/// The aggregation term is skipped at scale 0 and in ResizeOnly mode.
template <typename T>
std::vector<T> embed_cell(const Image& img, const Cell& cell, const EmbedParams<T>& params, const EmbedConfig& cfg) {
  detail::require_cell(img, cell, cfg);
  const int p = cfg.base_patch;
  std::vector<T> token = params.patch(detail::resized_patch<T>(img, cell, p));

  if (cell.scale > 0 && cfg.mode == EmbedMode::APT) {
    const Matrix<T> sub = params.patch(detail::sub_patch_inputs<T>(img, cell, p));
    const auto levels = detail::aggregate_levels(sub, cell.scale, params);
    const std::vector<T> z = params.zero_mlp(levels.back().row(0));
    for (std::size_t c = 0; c < token.size(); ++c) token[c] += z[c];
  }

  std::vector<T> pos(token.size(), T{});
  std::size_t covered = 0;
  detail::for_each_covered_pos(cell, cfg, [&](std::size_t idx) {
    const auto row = params.pos.row(idx);
    for (std::size_t c = 0; c < pos.size(); ++c) pos[c] += row[c];
    ++covered;
  });
  const T inv = T(1) / static_cast<T>(covered);
  for (std::size_t c = 0; c < token.size(); ++c) token[c] += pos[c] * inv;
  return token;
}

/// Cells that RandomDrop keeps: `keep` base cells chosen uniformly without
/// replacement, seeded by (seed, image id), returned in scan order.
inline std::vector<Cell> random_keep_cells(int image_w, int image_h, int p, std::size_t keep, std::uint64_t seed,
                                           std::uint64_t image_id) {
  auto all = uniform_assignment(image_w, image_h, p).cells;
  require(keep <= all.size(), Errc::CountMismatch, "cannot keep more cells than the base grid holds");
  std::vector<std::size_t> idx(all.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(mix_seed(seed, image_id));
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  std::vector<Cell> out;
  out.reserve(keep);
  for (std::size_t i : idx) out.push_back(all[i]);
  return out;
}

template <typename T>
TokenSequence<T> embed_image(const Image& img, const PatchAssignment& assignment, const EmbedParams<T>& params,
                             const EmbedConfig& cfg, std::uint64_t image_id = 0) {
  require(assignment.image_w == img.width && assignment.image_h == img.height &&
              assignment.base_patch == cfg.base_patch,
          Errc::DimensionMismatch, "assignment does not match image or embed config");
  TokenSequence<T> seq;
  seq.source = image_id;
  seq.meta = cfg.mode == EmbedMode::RandomDrop
                 ? random_keep_cells(img.width, img.height, cfg.base_patch, token_count(assignment), cfg.seed, image_id)
                 : assignment.cells;
  seq.tokens = Matrix<T>(seq.meta.size(), static_cast<std::size_t>(cfg.d_embed));
  for (std::size_t i = 0; i < seq.meta.size(); ++i) {
    const auto tok = embed_cell(img, seq.meta[i], params, cfg);
    std::copy(tok.begin(), tok.end(), seq.tokens.row(i).begin());
  }
  return seq;
}

/// Accumulates parameter gradients for the tokens of `seq` given dL/dtokens.
template <typename T>
void embed_backward(const Image& img, const TokenSequence<T>& seq, const Matrix<T>& d_tokens,
                    const EmbedParams<T>& params, const EmbedConfig& cfg, EmbedParams<T>& grads) {
  require(d_tokens.rows() == seq.meta.size() && d_tokens.cols() == static_cast<std::size_t>(cfg.d_embed),
          Errc::ShapeMismatch, "token gradient shape");
  const int p = cfg.base_patch;
  const std::size_t d = static_cast<std::size_t>(cfg.d_embed);
  for (std::size_t i = 0; i < seq.meta.size(); ++i) {
    const Cell& cell = seq.meta[i];
    const auto g = d_tokens.row(i);

    params.patch.backward(detail::resized_patch<T>(img, cell, p), g, grads.patch);

    std::size_t covered = 0;
    detail::for_each_covered_pos(cell, cfg, [&](std::size_t) { ++covered; });
    const T inv = T(1) / static_cast<T>(covered);
    detail::for_each_covered_pos(cell, cfg, [&](std::size_t idx) {
      auto row = grads.pos.row(idx);
      for (std::size_t c = 0; c < d; ++c) row[c] += g[c] * inv;
    });

    if (cell.scale == 0 || cfg.mode != EmbedMode::APT) continue;

    const Matrix<T> inputs = detail::sub_patch_inputs<T>(img, cell, p);
    const Matrix<T> sub = params.patch(inputs);
    const auto levels = detail::aggregate_levels(sub, cell.scale, params);

    Matrix<T> upstream(1, d);
    params.zero_mlp.backward(levels.back().row(0), g, grads.zero_mlp, upstream.row(0));

    // levels[l] is the input of stage k = scale - 1 - l.
    for (int k = 0; k < cell.scale; ++k) {
      const Matrix<T>& in = levels[static_cast<std::size_t>(cell.scale - 1 - k)];
      const std::size_t n_in = std::size_t{2} << k;
      const std::size_t n_out = n_in / 2;
      const auto& st = params.conv[static_cast<std::size_t>(k)];
      auto& gst = grads.conv[static_cast<std::size_t>(k)];
      Matrix<T> d_in(n_in * n_in, d);
      for (std::size_t oy = 0; oy < n_out; ++oy) {
        for (std::size_t ox = 0; ox < n_out; ++ox) {
          const auto go = upstream.row(oy * n_out + ox);
          for (std::size_t c = 0; c < d; ++c) gst.bias[c] += go[c];
          for (std::size_t t = 0; t < 4; ++t) {
            const std::size_t src = (2 * oy + t / 2) * n_in + 2 * ox + t % 2;
            const auto x = in.row(src);
            auto dx = d_in.row(src);
            for (std::size_t c = 0; c < d; ++c) {
              gst.weight(c, t) += go[c] * x[c];
              dx[c] = st.weight(c, t) * go[c];
            }
          }
        }
      }
      upstream = std::move(d_in);
    }
    for (std::size_t j = 0; j < inputs.rows(); ++j) params.patch.backward(inputs.row(j), upstream.row(j), grads.patch);
  }
}

}  // namespace apt
