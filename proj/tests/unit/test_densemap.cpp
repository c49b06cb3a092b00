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

using apt::Matrix;

namespace {

Matrix<float> numbered_tokens(std::size_t n, std::size_t d) {
  Matrix<float> m(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) m(r, c) = static_cast<float>(r * 100 + c);
  }
  return m;
}

}  // namespace

TEST(DenseMap, BaseScaleIsTheTokenGrid) {
  const auto a = apt::uniform_assignment(64, 48, 16);
  const auto tokens = numbered_tokens(12, 3);
  const auto map = apt::reconstruct(tokens, a);
  EXPECT_EQ(map.grid_w, 4);
  EXPECT_EQ(map.grid_h, 3);
  EXPECT_EQ(map.features, tokens);  // inverse of row-major flattening
}

TEST(DenseMap, SingleCoarseTokenFillsFourCells) {
  apt::PatchAssignment a{32, 32, 16, {{0, 0, 1}}};
  const auto map = apt::reconstruct(numbered_tokens(1, 4), a);
  ASSERT_EQ(map.features.rows(), 4u);
  for (int gy = 0; gy < 2; ++gy) {
    for (int gx = 0; gx < 2; ++gx) {
      EXPECT_TRUE(std::equal(map.at(gx, gy).begin(), map.at(gx, gy).end(), map.at(0, 0).begin()));
    }
  }
}

TEST(DenseMap, HalfNoiseMatchesPaintOracle) {
  apt::Rng rng(2024);
  const auto img = apt::synthetic::half_noise(64, 64, 3, rng);
  const auto a = apt::assign_patches(img, {16, 2, {5.5}, {}});
  const auto tokens = numbered_tokens(a.cells.size(), 2);
  const auto map = apt::reconstruct(tokens, a);
  // Paint: every base cell takes the token of the cell containing it.
  for (int gy = 0; gy < 4; ++gy) {
    for (int gx = 0; gx < 4; ++gx) {
      std::size_t owner = SIZE_MAX;
      for (std::size_t i = 0; i < a.cells.size(); ++i) {
        const auto& c = a.cells[i];
        const int n = 1 << c.scale;
        if (gx >= c.x / 16 && gx < c.x / 16 + n && gy >= c.y / 16 && gy < c.y / 16 + n) owner = i;
      }
      ASSERT_NE(owner, SIZE_MAX);
      EXPECT_EQ(map.at(gx, gy)[0], tokens(owner, 0));
    }
  }
  // Left half: two 2x2 blocks, each constant.
  for (int by = 0; by < 2; ++by) {
    for (int i = 0; i < 4; ++i) EXPECT_EQ(map.at(i % 2, 2 * by + i / 2)[0], map.at(0, 2 * by)[0]);
  }
  EXPECT_NE(map.at(0, 0)[0], map.at(0, 2)[0]);
}

TEST(DenseMap, CountMismatchIsRejected) {
  const auto a = apt::uniform_assignment(32, 32, 16);
  try {
    apt::reconstruct(numbered_tokens(3, 2), a);
    FAIL();
  } catch (const apt::Error& e) {
    EXPECT_EQ(e.code(), apt::Errc::CountMismatch);
  }
}

TEST(DenseMap, OverlappingAssignmentTripsWriteCount) {
  apt::PatchAssignment a{32, 32, 16, {{0, 0, 1}, {0, 0, 0}, {16, 0, 0}, {0, 16, 0}}};
  EXPECT_THROW(apt::reconstruct(numbered_tokens(4, 2), a), apt::Error);
}
