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

#include <gtest/gtest.h>

#include <cstring>

#include "support/oracles.hpp"

using apt::Cell;
using apt::EmbedConfig;
using apt::EmbedMode;
using apt::Image;

namespace {

EmbedConfig small_cfg(int d = 8, int p = 4, int scales = 3, EmbedMode mode = EmbedMode::APT) {
  EmbedConfig cfg;
  cfg.d_embed = d;
  cfg.base_patch = p;
  cfg.num_scales = scales;
  cfg.channels = 3;
  cfg.pos_grid_w = cfg.pos_grid_h = 16;
  cfg.mode = mode;
  cfg.seed = 7;
  return cfg;
}

std::vector<double> embed_patch(const std::vector<double>& x, const apt::Linear<double>& e) {
  return oracle::affine(x, e);
}

// HWC flatten of a p x p window.
std::vector<double> window(const Image& img, int x0, int y0, int p) {
  std::vector<double> out;
  for (int y = y0; y < y0 + p; ++y) {
    for (int x = x0; x < x0 + p; ++x) {
      for (int c = 0; c < img.channels; ++c) out.push_back(img.at(x, y, c));
    }
  }
  return out;
}

}  // namespace

TEST(Embedding, InitHasZeroMlpAndExpectedShapes) {
  EmbedConfig cfg;  // p=16, C=3, d=192, S=3
  const auto params = apt::init_params(cfg);
  EXPECT_EQ(params.patch.in_features(), 768u);
  EXPECT_EQ(params.patch.out_features(), 192u);
  EXPECT_EQ(params.conv.size(), 2u);
  for (float v : params.zero_mlp.weight.flat()) EXPECT_EQ(v, 0.0f);
  for (float v : params.zero_mlp.bias) EXPECT_EQ(v, 0.0f);
  const float bound = 1.0f / std::sqrt(768.0f);
  for (float v : params.patch.weight.flat()) EXPECT_LE(std::abs(v), bound);
}

TEST(Embedding, InitIsDeterministicPerSeed) {
  EmbedConfig cfg = small_cfg();
  cfg.seed = 42;
  const auto a = apt::init_params(cfg), b = apt::init_params(cfg);
  cfg.seed = 43;
  const auto c = apt::init_params(cfg);
  std::vector<float> fa, fb, fc;
  auto collect = [](std::vector<float>& out) {
    return [&out](const std::string&, std::span<const float> d, const auto&) { out.insert(out.end(), d.begin(), d.end()); };
  };
  apt::for_each_embed_tensor(a, collect(fa));
  apt::for_each_embed_tensor(b, collect(fb));
  apt::for_each_embed_tensor(c, collect(fc));
  ASSERT_EQ(fa.size(), fb.size());
  EXPECT_EQ(std::memcmp(fa.data(), fb.data(), fa.size() * sizeof(float)), 0);
  EXPECT_NE(fa, fc);
}

TEST(Embedding, FreshParamsGiveResizeOnlyOutputExactly) {
  apt::Rng rng(1);
  const Image img = apt::synthetic::mosaic(32, 32, 3, rng, 4);
  const auto cfg = small_cfg();
  const auto params = apt::init_params(cfg);
  auto resize_cfg = cfg;
  resize_cfg.mode = EmbedMode::ResizeOnly;
  for (const Cell cell : {Cell{0, 0, 0}, Cell{8, 8, 1}, Cell{16, 0, 2}}) {
    EXPECT_EQ(apt::embed_cell(img, cell, params, cfg), apt::embed_cell(img, cell, params, resize_cfg));
  }
}

TEST(Embedding, ScaleZeroIgnoresModeEvenWithTrainedCorrection) {
  apt::Rng rng(2);
  const Image img = apt::synthetic::noise(16, 16, 3, rng);
  auto cfg = small_cfg();
  auto params = apt::init_params(cfg);
  for (auto& v : params.zero_mlp.weight.flat()) v = static_cast<float>(rng.uniform(-1, 1));
  auto resize_cfg = cfg;
  resize_cfg.mode = EmbedMode::ResizeOnly;
  EXPECT_EQ(apt::embed_cell(img, {4, 8, 0}, params, cfg), apt::embed_cell(img, {4, 8, 0}, params, resize_cfg));
}

TEST(Embedding, ScaleOneMatchesScalarOracle) {
  apt::Rng rng(3);
  const Image img = apt::synthetic::noise(16, 16, 3, rng);
  const auto cfg = small_cfg(6, 4, 2);
  auto params = apt::init_params<double>(cfg);
  for (std::size_t c = 0; c < 6; ++c) {
    for (std::size_t t = 0; t < 4; ++t) params.conv[0].weight(c, t) = t == 0 ? 1.0 : 0.0;  // picks the top-left child
    params.conv[0].bias[c] = 0.1 * static_cast<double>(c);
  }
  for (auto& v : params.zero_mlp.weight.flat()) v = rng.uniform(-0.5, 0.5);
  for (auto& v : params.zero_mlp.bias) v = rng.uniform(-0.5, 0.5);

  const Cell cell{8, 4, 1};
  // Resize_p of the 8x8 cell: each output is a 2x2 block mean.
  std::vector<double> resized;
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) s += img.at(8 + 2 * x + dx, 4 + 2 * y + dy, c);
        }
        resized.push_back(static_cast<float>(s / 4.0));
      }
    }
  }
  std::vector<double> expect = embed_patch(resized, params.patch);
  const auto top_left = embed_patch(window(img, 8, 4, 4), params.patch);
  std::vector<double> conv(6);
  for (std::size_t c = 0; c < 6; ++c) conv[c] = top_left[c] + params.conv[0].bias[c];
  const auto z = oracle::affine(conv, params.zero_mlp);
  for (std::size_t c = 0; c < 6; ++c) {
    double pos = 0.0;
    for (int gy = 1; gy <= 2; ++gy) {
      for (int gx = 2; gx <= 3; ++gx) pos += params.pos(static_cast<std::size_t>(gy * 16 + gx), c);
    }
    expect[c] += z[c] + pos / 4.0;
  }
  const auto got = apt::embed_cell(img, cell, params, cfg);
  for (std::size_t c = 0; c < 6; ++c) EXPECT_NEAR(got[c], expect[c], 1e-6) << c;
}

TEST(Embedding, PatchEmbeddingIsAffine) {
  apt::Rng rng(4);
  const auto cfg = small_cfg();
  const auto params = apt::init_params(cfg);
  std::vector<float> x(cfg.patch_dim());
  for (auto& v : x) v = static_cast<float>(rng.uniform());
  const auto base = params.patch(std::span<const float>(x));
  for (float a : {0.0f, 2.0f}) {
    std::vector<float> ax(x);
    for (auto& v : ax) v *= a;
    const auto y = params.patch(std::span<const float>(ax));
    for (std::size_t c = 0; c < y.size(); ++c) {
      EXPECT_NEAR(y[c], a * (base[c] - params.patch.bias[c]) + params.patch.bias[c], 1e-5);
    }
  }
}

TEST(Embedding, ConstantImageTokensAreEqualUpToPosition) {
  const auto cfg = small_cfg(8, 16, 2);
  auto params = apt::init_params(cfg);
  std::fill(params.pos.flat().begin(), params.pos.flat().end(), 0.0f);
  const Image img(64, 64, 3, 0.6f);
  const auto a = apt::assign_patches(img, {16, 2, {5.5}, {}});
  const auto seq = apt::embed_image(img, a, params, cfg);
  ASSERT_EQ(seq.tokens.rows(), 4u);
  for (std::size_t r = 1; r < 4; ++r) {
    EXPECT_TRUE(std::equal(seq.tokens.row(r).begin(), seq.tokens.row(r).end(), seq.tokens.row(0).begin()));
  }
}

TEST(Embedding, TokenOrderFollowsAssignment) {
  apt::Rng rng(5);
  const Image img = apt::synthetic::mosaic(64, 64, 3, rng, 4);
  const auto cfg = small_cfg(8, 8, 3);
  const auto params = apt::init_params(cfg);
  const auto a = apt::assign_patches(img, {8, 3, {5.5, 4.0}, {}});
  const auto seq = apt::embed_image(img, a, params, cfg);
  ASSERT_EQ(seq.meta, a.cells);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const auto tok = apt::embed_cell(img, a.cells[i], params, cfg);
    EXPECT_TRUE(std::equal(tok.begin(), tok.end(), seq.tokens.row(i).begin()));
  }
}

TEST(Embedding, BaselineTilingGives196Tokens) {
  auto cfg = small_cfg(4, 16, 3);
  const auto params = apt::init_params(cfg);
  apt::Rng rng(6);
  const Image img = apt::synthetic::mosaic(224, 224, 3, rng);
  const auto a = apt::assign_patches(img, {16, 3, {-1, -1}, {}});
  EXPECT_EQ(apt::embed_image(img, a, params, cfg).tokens.rows(), 196u);
}

TEST(Embedding, RandomDropMatchesAdaptiveCount) {
  apt::Rng rng(2024);
  const Image img = apt::synthetic::half_noise(64, 64, 3, rng);
  const auto a = apt::assign_patches(img, {16, 2, {5.5}, {}});
  ASSERT_EQ(apt::token_count(a), 10u);
  const auto cfg = small_cfg(8, 16, 2, EmbedMode::RandomDrop);
  const auto params = apt::init_params(cfg);
  const auto s1 = apt::embed_image(img, a, params, cfg, 11);
  const auto s2 = apt::embed_image(img, a, params, cfg, 11);
  const auto s3 = apt::embed_image(img, a, params, cfg, 12);
  EXPECT_EQ(s1.tokens.rows(), 10u);
  EXPECT_EQ(s1.meta, s2.meta);
  for (const Cell& c : s1.meta) EXPECT_EQ(c.scale, 0);
  EXPECT_NE(s1.meta, s3.meta);
}

TEST(Embedding, Errors) {
  const auto cfg = small_cfg(4, 4, 2);
  const auto params = apt::init_params(cfg);
  const Image img(16, 16, 3, 0.5f);
  try {
    apt::embed_cell(img, {12, 12, 1}, params, cfg);
    FAIL();
  } catch (const apt::Error& e) {
    EXPECT_EQ(e.code(), apt::Errc::CellOutOfBounds);
  }
  try {
    apt::embed_image(img, apt::uniform_assignment(8, 8, 4), params, cfg);
    FAIL();
  } catch (const apt::Error& e) {
    EXPECT_EQ(e.code(), apt::Errc::DimensionMismatch);
  }
}

TEST(Embedding, GradientsMatchFiniteDifferences) {
  const auto rep = apt::run_gradient_checks(3, 1e-4, 16);
  for (const auto& [name, r] : rep.embed_sum) {
    EXPECT_LE(r.rel_error, 1e-3) << name;
    EXPECT_GT(r.checked, 0u);
  }
  for (const auto& [name, r] : rep.chained) EXPECT_LE(r.rel_error, 1e-3) << name;
}
