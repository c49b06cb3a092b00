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

#include "support/oracles.hpp"

using apt::Image;
using apt::ImageView;

namespace {

Image from_rows(const std::vector<std::vector<double>>& rows) {
  Image img(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()), 1);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) img.at(x, y) = static_cast<float>(rows[y][x]);
  }
  return img;
}

ImageView whole(const Image& img) { return ImageView(img, 0, 0, img.width, img.height); }

}  // namespace

TEST(Entropy, ConstantIsZero) {
  const Image img(8, 8, 1, 0.3f);
  EXPECT_EQ(apt::entropy(whole(img)).value, 0.0);
}

TEST(Entropy, TwoEquiprobableValuesIsOneBit) {
  Image img(8, 8, 1, 0.0f);
  for (int i = 0; i < 32; ++i) img.data[static_cast<std::size_t>(2 * i)] = 1.0f;
  EXPECT_EQ(apt::entropy(whole(img)).value, 1.0);
}

TEST(Entropy, KnownHistogramMatchesBruteForce) {
  // 8x8 with counts 32/16/8/8 -> 1.75 bits.
  Image img(8, 8, 1);
  for (int i = 0; i < 64; ++i) img.data[static_cast<std::size_t>(i)] = i < 32 ? 0.0f : i < 48 ? 0.25f : i < 56 ? 0.5f : 1.0f;
  EXPECT_NEAR(apt::entropy(whole(img)).value, 1.75, 1e-12);
  EXPECT_NEAR(apt::entropy(whole(img)).value, oracle::entropy(oracle::region_codes(img, 0, 0, 8, 8)), 1e-9);
}

TEST(Entropy, BinningRecoversEightBitCodes) {
  for (int code = 0; code < 256; ++code) EXPECT_EQ(apt::intensity_bin(static_cast<float>(code) / 255.0f, 256), code);
}

TEST(Entropy, PermutationInvariantAndBounded) {
  apt::Rng rng(8);
  for (int trial = 0; trial < 25; ++trial) {
    Image img = apt::synthetic::noise(16, 16, 1, rng);
    const double h = apt::entropy(whole(img)).value;
    EXPECT_LE(h, 8.0);
    for (std::size_t i = img.data.size() - 1; i > 0; --i) {
      std::swap(img.data[i], img.data[static_cast<std::size_t>(rng.below(i + 1))]);
    }
    EXPECT_NEAR(apt::entropy(whole(img)).value, h, 1e-12);
  }
}

TEST(Entropy, SubRegionAndEmptyRegion) {
  Image img(4, 4, 1, 0.0f);
  img.at(2, 2) = 1.0f;
  img.at(3, 3) = 1.0f;
  EXPECT_EQ(apt::entropy(ImageView(img, 0, 0, 2, 2)).value, 0.0);
  EXPECT_EQ(apt::entropy(ImageView(img, 2, 2, 2, 2)).value, 1.0);
  try {
    apt::entropy(ImageView(img, 0, 0, 0, 0));
    FAIL();
  } catch (const apt::Error& e) {
    EXPECT_EQ(e.code(), apt::Errc::EmptyRegion);
  }
}

TEST(Laplacian, ConstantAndRampAreZero) {
  EXPECT_EQ(apt::laplacian_score(whole(Image(6, 6, 1, 0.7f))).value, 0.0);
  std::vector<std::vector<double>> ramp(6, std::vector<double>(6));
  for (auto& row : ramp) {
    for (int x = 0; x < 6; ++x) row[x] = x * 0.125;
  }
  EXPECT_NEAR(apt::laplacian_score(whole(from_rows(ramp))).value, 0.0, 1e-7);
}

TEST(Laplacian, CheckerboardMatchesKernelOracle) {
  std::vector<std::vector<double>> board(4, std::vector<double>(4));
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) board[y][x] = (x + y) % 2;
  }
  const double got = apt::laplacian_score(whole(from_rows(board))).value;
  EXPECT_DOUBLE_EQ(got, oracle::laplacian(board));
  EXPECT_DOUBLE_EQ(got, 4.0);
}

TEST(Laplacian, RandomPatchesMatchKernelOracle) {
  apt::Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 1 + static_cast<int>(rng.below(10)), h = 1 + static_cast<int>(rng.below(10));
    std::vector<std::vector<double>> px(h, std::vector<double>(w));
    for (auto& row : px) {
      for (auto& v : row) v = static_cast<float>(rng.uniform());
    }
    EXPECT_NEAR(apt::laplacian_score(whole(from_rows(px))).value, oracle::laplacian(px), 1e-6);
  }
}

TEST(Upsampling, ConstantIsZeroAtEveryScale) {
  const Image img(16, 16, 1, 0.4f);
  for (int s = 1; s <= 4; ++s) EXPECT_EQ(apt::upsampling_score(whole(img), s).value, 0.0);
}

TEST(Upsampling, TwoByTwoMatchesExplicitDownUp) {
  const std::vector<std::vector<double>> px{{0, 1}, {1, 0}};
  const auto up = oracle::resample(oracle::resample(px, 1, 1), 2, 2);
  double mse = 0.0;
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 2; ++x) mse += (px[y][x] - up[y][x]) * (px[y][x] - up[y][x]) / 4.0;
  }
  EXPECT_DOUBLE_EQ(mse, 0.25);
  EXPECT_NEAR(apt::upsampling_score(whole(from_rows(px)), 1).value, mse, 1e-7);
}

TEST(Upsampling, NonNegativeAndDivisibility) {
  apt::Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Image img = apt::synthetic::noise(8, 8, 1, rng);
    EXPECT_GE(apt::upsampling_score(whole(img), 1 + trial % 3).value, 0.0);
  }
  try {
    apt::upsampling_score(whole(Image(6, 6, 1)), 2);
    FAIL();
  } catch (const apt::Error& e) {
    EXPECT_EQ(e.code(), apt::Errc::IndivisibleRegion);
  }
}

TEST(Scorers, AllReturnZeroOnConstantRegions) {
  const Image img(32, 32, 1, 0.9f);
  for (auto kind : {apt::ScorerKind::Entropy, apt::ScorerKind::Laplacian, apt::ScorerKind::Upsampling}) {
    EXPECT_EQ(apt::score_region(whole(img), {kind, 256}, 1).value, 0.0) << apt::scorer_name(kind);
  }
}

TEST(Scorers, NamesRoundTrip) {
  for (auto kind : {apt::ScorerKind::Entropy, apt::ScorerKind::Laplacian, apt::ScorerKind::Upsampling}) {
    EXPECT_EQ(apt::parse_scorer(apt::scorer_name(kind)), kind);
  }
  EXPECT_THROW(apt::parse_scorer("sobel"), apt::Error);
}

TEST(Scorers, RejectMultiChannelInput) {
  const Image rgb(4, 4, 3, 0.5f);
  EXPECT_THROW(apt::entropy(whole(rgb)), apt::Error);
}
