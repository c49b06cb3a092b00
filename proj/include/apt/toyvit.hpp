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
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "apt/error.hpp"
#include "apt/packing.hpp"
#include "apt/rng.hpp"
#include "apt/tensor.hpp"

namespace apt {

struct ToyViTConfig {
  int depth = 4;
  int heads = 4;
  int d_embed = 192;
  double mlp_ratio = 4.0;
  std::uint64_t seed = 0;

  std::size_t hidden() const {
    return static_cast<std::size_t>(std::max(1L, std::lround(d_embed * mlp_ratio)));
  }
  std::size_t head_dim() const { return static_cast<std::size_t>(d_embed / heads); }
};

inline void validate(const ToyViTConfig& cfg) {
  require(cfg.depth >= 0, Errc::InvalidConfig, "depth must be >= 0");
  require(cfg.d_embed >= 1 && cfg.heads >= 1, Errc::InvalidConfig, "d_embed and heads must be >= 1");
  require(cfg.d_embed % cfg.heads == 0, Errc::InvalidConfig, "d_embed must be divisible by heads");
  require(cfg.mlp_ratio > 0.0, Errc::InvalidConfig, "mlp_ratio must be positive");
}

template <typename T>
struct LayerNormParams {
  std::vector<T> gamma;
  std::vector<T> beta;
};

template <typename T>
struct EncoderBlock {
  LayerNormParams<T> ln1;
  Linear<T> q, k, v, proj;
  LayerNormParams<T> ln2;
  Linear<T> fc1, fc2;
};

template <typename T>
struct ToyViTParams {
  ToyViTConfig cfg;
  std::vector<EncoderBlock<T>> blocks;
  LayerNormParams<T> final_norm;
};

template <typename T, typename F>
void for_each_vit_tensor(ToyViTParams<T>& p, F&& f) {
  auto vec = [&](const std::string& name, std::vector<T>& v) {
    f(name, std::span<T>(v), std::vector<std::size_t>{v.size()});
  };
  auto lin = [&](const std::string& name, Linear<T>& l) {
    f(name + ".weight", l.weight.flat(), std::vector<std::size_t>{l.weight.rows(), l.weight.cols()});
    vec(name + ".bias", l.bias);
  };
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    auto& b = p.blocks[i];
    const std::string pre = "blocks." + std::to_string(i) + ".";
    vec(pre + "ln1.gamma", b.ln1.gamma);
    vec(pre + "ln1.beta", b.ln1.beta);
    lin(pre + "attn.q", b.q);
    lin(pre + "attn.k", b.k);
    lin(pre + "attn.v", b.v);
    lin(pre + "attn.proj", b.proj);
    vec(pre + "ln2.gamma", b.ln2.gamma);
    vec(pre + "ln2.beta", b.ln2.beta);
    lin(pre + "mlp.fc1", b.fc1);
    lin(pre + "mlp.fc2", b.fc2);
  }
  vec("norm.gamma", p.final_norm.gamma);
  vec("norm.beta", p.final_norm.beta);
}

template <typename T, typename F>
void for_each_vit_tensor(const ToyViTParams<T>& p, F&& f) {
  for_each_vit_tensor(const_cast<ToyViTParams<T>&>(p),
                      [&](const std::string& name, std::span<T> data, const std::vector<std::size_t>& shape) {
                        f(name, std::span<const T>(data), shape);
                      });
}

template <typename T = float>
ToyViTParams<T> init_vit(const ToyViTConfig& cfg) {
  validate(cfg);
  const auto d = static_cast<std::size_t>(cfg.d_embed);
  const std::size_t h = cfg.hidden();
  Rng rng(mix_seed(cfg.seed, 0x70F17ull));
  auto linear = [&](std::size_t in, std::size_t out) {
    Linear<T> l(in, out);
    const double k = 1.0 / std::sqrt(static_cast<double>(in));
    for (auto& w : l.weight.flat()) w = static_cast<T>(static_cast<float>(rng.uniform(-k, k)));
    for (auto& b : l.bias) b = static_cast<T>(static_cast<float>(rng.uniform(-k, k)));
    return l;
  };
  auto norm = [&] { return LayerNormParams<T>{std::vector<T>(d, T(1)), std::vector<T>(d, T(0))}; };

  ToyViTParams<T> p;
  p.cfg = cfg;
  for (int i = 0; i < cfg.depth; ++i) {
    EncoderBlock<T> b;
    b.ln1 = norm();
    b.q = linear(d, d);
    b.k = linear(d, d);
    b.v = linear(d, d);
    b.proj = linear(d, d);
    b.ln2 = norm();
    b.fc1 = linear(d, h);
    b.fc2 = linear(h, d);
    p.blocks.push_back(std::move(b));
  }
  p.final_norm = norm();
  return p;
}

template <typename T>
ToyViTParams<T> zeros_like(const ToyViTParams<T>& p) {
  ToyViTParams<T> z = p;
  for_each_vit_tensor(z, [](const std::string&, std::span<T> data, const auto&) {
    std::fill(data.begin(), data.end(), T{});
  });
  return z;
}

template <typename To, typename From>
ToyViTParams<To> vit_cast(const ToyViTParams<From>& p) {
  auto norm = [](const LayerNormParams<From>& n) {
    return LayerNormParams<To>{std::vector<To>(n.gamma.begin(), n.gamma.end()),
                               std::vector<To>(n.beta.begin(), n.beta.end())};
  };
  ToyViTParams<To> out;
  out.cfg = p.cfg;
  for (const auto& b : p.blocks) {
    out.blocks.push_back({norm(b.ln1), linear_cast<To>(b.q), linear_cast<To>(b.k), linear_cast<To>(b.v),
                          linear_cast<To>(b.proj), norm(b.ln2), linear_cast<To>(b.fc1), linear_cast<To>(b.fc2)});
  }
  out.final_norm = norm(p.final_norm);
  return out;
}

namespace detail {

inline constexpr double kLayerNormEps = 1e-5;

template <typename T>
struct NormCache {
  Matrix<T> xhat;
  std::vector<T> rstd;
};

template <typename T>
Matrix<T> layer_norm(const Matrix<T>& x, const LayerNormParams<T>& p, NormCache<T>* cache) {
  const std::size_t d = x.cols();
  Matrix<T> y(x.rows(), d);
  if (cache) {
    cache->xhat = Matrix<T>(x.rows(), d);
    cache->rstd.assign(x.rows(), T{});
  }
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    T mean{};
    for (T v : row) mean += v;
    mean /= static_cast<T>(d);
    T var{};
    for (T v : row) var += (v - mean) * (v - mean);
    var /= static_cast<T>(d);
    const T rstd = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    auto out = y.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      const T xhat = (row[c] - mean) * rstd;
      out[c] = p.gamma[c] * xhat + p.beta[c];
      if (cache) cache->xhat(r, c) = xhat;
    }
    if (cache) cache->rstd[r] = rstd;
  }
  return y;
}

template <typename T>
Matrix<T> layer_norm_backward(const NormCache<T>& cache, const Matrix<T>& dy, const LayerNormParams<T>& p,
                              LayerNormParams<T>& grad) {
  const std::size_t d = dy.cols();
  Matrix<T> dx(dy.rows(), d);
  std::vector<T> dxhat(d);
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    T mean_dxhat{};
    T mean_dxhat_xhat{};
    for (std::size_t c = 0; c < d; ++c) {
      const T g = dy(r, c);
      const T xh = cache.xhat(r, c);
      grad.gamma[c] += g * xh;
      grad.beta[c] += g;
      dxhat[c] = g * p.gamma[c];
      mean_dxhat += dxhat[c];
      mean_dxhat_xhat += dxhat[c] * xh;
    }
    mean_dxhat /= static_cast<T>(d);
    mean_dxhat_xhat /= static_cast<T>(d);
    for (std::size_t c = 0; c < d; ++c) {
      dx(r, c) = cache.rstd[r] * (dxhat[c] - mean_dxhat - cache.xhat(r, c) * mean_dxhat_xhat);
    }
  }
  return dx;
}

template <typename T>
T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
}

template <typename T>
T gelu_grad(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
  const T pdf = std::exp(T(-0.5) * x * x) * (std::numbers::inv_sqrtpi_v<T> / std::numbers::sqrt2_v<T>);
  return cdf + x * pdf;
}

template <typename T>
struct LayerCache {
  Matrix<T> x_in;
  NormCache<T> norm1;
  Matrix<T> h1, q, k, v;
  std::vector<std::vector<T>> probs;  // [block * heads + head] -> n x n
  Matrix<T> attn;                     // concatenated head outputs, pre-projection
  Matrix<T> x_mid;
  NormCache<T> norm2;
  Matrix<T> h2, u, g;
};

inline void check_blocks(std::span<const std::size_t> blocks, std::size_t rows) {
  require(blocks.size() >= 2 && blocks.front() == 0 && blocks.back() == rows, Errc::ShapeMismatch,
          "attention blocks must start at 0 and end at the token count");
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    require(blocks[i] > blocks[i - 1], Errc::ShapeMismatch, "attention blocks must be strictly increasing");
  }
}

// Multi-head attention restricted to each [blocks[b], blocks[b+1]) interval.
template <typename T>
Matrix<T> block_attention(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                          std::span<const std::size_t> blocks, int heads, std::vector<std::vector<T>>* probs_out) {
  const std::size_t d = q.cols();
  const std::size_t hd = d / static_cast<std::size_t>(heads);
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));
  Matrix<T> out(q.rows(), d);
  std::vector<T> probs;
  for (std::size_t b = 0; b + 1 < blocks.size(); ++b) {
    const std::size_t lo = blocks[b];
    const std::size_t n = blocks[b + 1] - lo;
    for (int h = 0; h < heads; ++h) {
      const std::size_t c0 = static_cast<std::size_t>(h) * hd;
      probs.assign(n * n, T{});
      for (std::size_t i = 0; i < n; ++i) {
        const T* qi = &q(lo + i, c0);
        T* row = probs.data() + i * n;
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
          const T* kj = &k(lo + j, c0);
          T s{};
          for (std::size_t c = 0; c < hd; ++c) s += qi[c] * kj[c];
          row[j] = s * scale;
          mx = std::max(mx, row[j]);
        }
        T sum{};
        for (std::size_t j = 0; j < n; ++j) {
          row[j] = std::exp(row[j] - mx);
          sum += row[j];
        }
        const T inv = T(1) / sum;
        T* oi = &out(lo + i, c0);
        for (std::size_t j = 0; j < n; ++j) {
          row[j] *= inv;
          const T* vj = &v(lo + j, c0);
          for (std::size_t c = 0; c < hd; ++c) oi[c] += row[j] * vj[c];
        }
      }
      if (probs_out) probs_out->push_back(probs);
    }
  }
  return out;
}

}  // namespace detail

template <typename T>
struct ForwardCache {
  std::vector<std::size_t> blocks;
  std::vector<detail::LayerCache<T>> layers;
  detail::NormCache<T> final_norm;
};

/// Pre-norm encoder: x += MHSA(LN(x)); x += MLP(LN(x)); then a final LN.
/// Attention only mixes tokens inside the same block interval, so a packed
/// batch produces exactly the rows each image would produce on its own.
template <typename T>
Matrix<T> forward(const Matrix<T>& input, std::span<const std::size_t> blocks, const ToyViTParams<T>& params,
                  ForwardCache<T>* cache = nullptr) {
  require(input.cols() == static_cast<std::size_t>(params.cfg.d_embed), Errc::DimensionMismatch,
          "token width does not match the encoder");
  detail::check_blocks(blocks, input.rows());
  if (cache) {
    cache->blocks.assign(blocks.begin(), blocks.end());
    cache->layers.clear();
  }
  Matrix<T> x = input;
  for (const auto& blk : params.blocks) {
    detail::LayerCache<T> lc;
    detail::LayerCache<T>* c = cache ? &lc : nullptr;
    if (c) c->x_in = x;

    Matrix<T> h1 = detail::layer_norm(x, blk.ln1, c ? &c->norm1 : nullptr);
    Matrix<T> q = blk.q(h1);
    Matrix<T> k = blk.k(h1);
    Matrix<T> v = blk.v(h1);
    Matrix<T> attn = detail::block_attention(q, k, v, blocks, params.cfg.heads, c ? &c->probs : nullptr);
    const Matrix<T> proj = blk.proj(attn);
    for (std::size_t i = 0; i < x.size(); ++i) x.flat()[i] += proj.flat()[i];
    if (c) c->x_mid = x;

    Matrix<T> h2 = detail::layer_norm(x, blk.ln2, c ? &c->norm2 : nullptr);
    Matrix<T> u = blk.fc1(h2);
    Matrix<T> g(u.rows(), u.cols());
    for (std::size_t i = 0; i < u.size(); ++i) g.flat()[i] = detail::gelu(u.flat()[i]);
    const Matrix<T> m = blk.fc2(g);
    for (std::size_t i = 0; i < x.size(); ++i) x.flat()[i] += m.flat()[i];

    if (c) {
      c->h1 = std::move(h1);
      c->q = std::move(q);
      c->k = std::move(k);
      c->v = std::move(v);
      c->attn = std::move(attn);
      c->h2 = std::move(h2);
      c->u = std::move(u);
      c->g = std::move(g);
      cache->layers.push_back(std::move(lc));
    }
  }
  return detail::layer_norm(x, params.final_norm, cache ? &cache->final_norm : nullptr);
}

template <typename T>
Matrix<T> forward(const PackedBatch<T>& batch, const ToyViTParams<T>& params, ForwardCache<T>* cache = nullptr) {
  return forward(batch.tokens, std::span<const std::size_t>(batch.blocks), params, cache);
}

/// Accumulates parameter gradients into `grads` and returns dL/dinput.
template <typename T>
Matrix<T> backward(const ForwardCache<T>& cache, const Matrix<T>& d_out, const ToyViTParams<T>& params,
                   ToyViTParams<T>& grads) {
  require(cache.layers.size() == params.blocks.size(), Errc::ShapeMismatch, "cache does not match params");
  Matrix<T> dx = detail::layer_norm_backward(cache.final_norm, d_out, params.final_norm, grads.final_norm);
  const int heads = params.cfg.heads;
  const std::size_t d = static_cast<std::size_t>(params.cfg.d_embed);
  const std::size_t hd = d / static_cast<std::size_t>(heads);
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));

  for (std::size_t li = params.blocks.size(); li-- > 0;) {
    const auto& blk = params.blocks[li];
    auto& gblk = grads.blocks[li];
    const auto& c = cache.layers[li];

    // MLP branch.
    Matrix<T> dg = blk.fc2.backward(c.g, dx, gblk.fc2);
    for (std::size_t i = 0; i < dg.size(); ++i) dg.flat()[i] *= detail::gelu_grad(c.u.flat()[i]);
    const Matrix<T> dh2 = blk.fc1.backward(c.h2, dg, gblk.fc1);
    const Matrix<T> dmid = detail::layer_norm_backward(c.norm2, dh2, blk.ln2, gblk.ln2);
    for (std::size_t i = 0; i < dx.size(); ++i) dx.flat()[i] += dmid.flat()[i];

    // Attention branch.
    const Matrix<T> dattn = blk.proj.backward(c.attn, dx, gblk.proj);
    Matrix<T> dq(c.q.rows(), d), dk(c.k.rows(), d), dv(c.v.rows(), d);
    std::size_t slot = 0;
    std::vector<T> dp;
    for (std::size_t b = 0; b + 1 < cache.blocks.size(); ++b) {
      const std::size_t lo = cache.blocks[b];
      const std::size_t n = cache.blocks[b + 1] - lo;
      for (int h = 0; h < heads; ++h, ++slot) {
        const std::size_t c0 = static_cast<std::size_t>(h) * hd;
        const auto& P = c.probs[slot];
        dp.assign(n, T{});
        for (std::size_t i = 0; i < n; ++i) {
          const T* doi = &dattn(lo + i, c0);
          T dot{};
          for (std::size_t j = 0; j < n; ++j) {
            const T* vj = &c.v(lo + j, c0);
            T s{};
            for (std::size_t cc = 0; cc < hd; ++cc) s += doi[cc] * vj[cc];
            dp[j] = s;
            dot += P[i * n + j] * s;
            T* dvj = &dv(lo + j, c0);
            for (std::size_t cc = 0; cc < hd; ++cc) dvj[cc] += P[i * n + j] * doi[cc];
          }
          T* dqi = &dq(lo + i, c0);
          const T* qi = &c.q(lo + i, c0);
          for (std::size_t j = 0; j < n; ++j) {
            const T ds = P[i * n + j] * (dp[j] - dot) * scale;
            const T* kj = &c.k(lo + j, c0);
            T* dkj = &dk(lo + j, c0);
            for (std::size_t cc = 0; cc < hd; ++cc) {
              dqi[cc] += ds * kj[cc];
              dkj[cc] += ds * qi[cc];
            }
          }
        }
      }
    }
    Matrix<T> dh1 = blk.q.backward(c.h1, dq, gblk.q);
    const Matrix<T> dh1k = blk.k.backward(c.h1, dk, gblk.k);
    const Matrix<T> dh1v = blk.v.backward(c.h1, dv, gblk.v);
    for (std::size_t i = 0; i < dh1.size(); ++i) dh1.flat()[i] += dh1k.flat()[i] + dh1v.flat()[i];
    const Matrix<T> din = detail::layer_norm_backward(c.norm1, dh1, blk.ln1, gblk.ln1);
    for (std::size_t i = 0; i < dx.size(); ++i) dx.flat()[i] += din.flat()[i];
  }
  return dx;
}

/// Mean over rows.
template <typename T>
std::vector<T> pool(const Matrix<T>& outputs) {
  require(outputs.rows() > 0, Errc::EmptySequence, "cannot pool zero tokens");
  std::vector<T> out(outputs.cols(), T{});
  for (std::size_t r = 0; r < outputs.rows(); ++r) {
    const auto row = outputs.row(r);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += row[c];
  }
  for (auto& v : out) v /= static_cast<T>(outputs.rows());
  return out;
}

/// Multiply-accumulate count of one forward pass over n tokens, the unit
/// in which ViT GFLOPS are customarily reported:
///   depth * (4 n d^2 + 2 n^2 d + 2 n d^2 r)
/// for the q/k/v/proj projections, the score and value products, and the MLP.
inline double estimate_flops(std::size_t n, const ToyViTConfig& cfg) {
  const double nn = static_cast<double>(n);
  const double d = cfg.d_embed;
  const double per_layer = 4.0 * nn * d * d + 2.0 * nn * nn * d + 2.0 * nn * d * d * cfg.mlp_ratio;
  return per_layer * cfg.depth;
}

}  // namespace apt
