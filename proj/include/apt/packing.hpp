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
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "apt/embedding.hpp"
#include "apt/error.hpp"
#include "apt/quadtree.hpp"
#include "apt/tensor.hpp"

namespace apt {

/// Variable-length sequences concatenated without padding. The attention
/// mask is never materialized: token i may attend to token j iff both fall
/// in the same [blocks[k], blocks[k+1]) interval. `blocks` equals `offsets`
/// unless the batch was packed per window, in which case it refines them.
template <typename T>
struct PackedBatch {
  Matrix<T> tokens;
  std::vector<std::size_t> offsets;       // image boundaries, size B + 1
  std::vector<std::size_t> blocks;        // attention intervals
  std::vector<Cell> meta;
  std::vector<std::size_t> source_index;  // row of the token in its own sequence

  std::size_t image_count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::size_t total_tokens() const { return tokens.rows(); }

  std::size_t block_of(std::size_t i) const {
    return static_cast<std::size_t>(std::upper_bound(blocks.begin(), blocks.end(), i) - blocks.begin()) - 1;
  }
  bool attends(std::size_t i, std::size_t j) const { return block_of(i) == block_of(j); }
};

/// Token index lists, one per window, windows in row-major order per image.
struct WindowPartition {
  int window_side = 0;
  std::vector<std::vector<std::size_t>> groups;
};

namespace detail {

template <typename T>
void append_rows(PackedBatch<T>& out, const TokenSequence<T>& seq, std::span<const std::size_t> order,
                 std::size_t& row) {
  for (std::size_t src : order) {
    const auto r = seq.tokens.row(src);
    std::copy(r.begin(), r.end(), out.tokens.row(row).begin());
    out.meta.push_back(seq.meta[src]);
    out.source_index.push_back(src);
    ++row;
  }
}

template <typename T>
std::size_t check_sequences(std::span<const TokenSequence<T>> seqs) {
  require(!seqs.empty(), Errc::EmptyBatch, "pack needs at least one sequence");
  const std::size_t d = seqs.front().tokens.cols();
  std::size_t total = 0;
  for (const auto& s : seqs) {
    require(s.tokens.cols() == d, Errc::DimensionMismatch, "sequences disagree on d_embed");
    require(s.tokens.rows() > 0, Errc::EmptySequence, "cannot pack an empty sequence");
    require(s.meta.size() == s.tokens.rows(), Errc::ShapeMismatch, "token/meta count mismatch");
    total += s.tokens.rows();
  }
  return total;
}

}  // namespace detail

template <typename T>
PackedBatch<T> pack(std::span<const TokenSequence<T>> seqs) {
  const std::size_t total = detail::check_sequences(seqs);
  PackedBatch<T> out;
  out.tokens = Matrix<T>(total, seqs.front().tokens.cols());
  out.offsets.push_back(0);
  std::size_t row = 0;
  for (const auto& s : seqs) {
    std::vector<std::size_t> order(s.tokens.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    detail::append_rows(out, s, order, row);
    out.offsets.push_back(row);
  }
  out.blocks = out.offsets;
  return out;
}

template <typename T>
PackedBatch<T> pack(const std::vector<TokenSequence<T>>& seqs) {
  return pack(std::span<const TokenSequence<T>>(seqs));
}

/// Packs with one attention block per window. Within each image the tokens
/// are laid out window by window; `source_index` lets unpack restore the
/// original order.
template <typename T>
PackedBatch<T> pack_windowed(std::span<const TokenSequence<T>> seqs, std::span<const WindowPartition> windows) {
  const std::size_t total = detail::check_sequences(seqs);
  require(windows.size() == seqs.size(), Errc::ShapeMismatch, "one window partition per sequence");
  PackedBatch<T> out;
  out.tokens = Matrix<T>(total, seqs.front().tokens.cols());
  out.offsets.push_back(0);
  out.blocks.push_back(0);
  std::size_t row = 0;
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    std::size_t placed = 0;
    for (const auto& group : windows[b].groups) {
      if (group.empty()) continue;
      for (std::size_t i : group) require(i < seqs[b].tokens.rows(), Errc::ShapeMismatch, "window index out of range");
      detail::append_rows(out, seqs[b], group, row);
      out.blocks.push_back(row);
      placed += group.size();
    }
    require(placed == seqs[b].tokens.rows(), Errc::ShapeMismatch, "window partition does not cover the sequence");
    out.offsets.push_back(row);
  }
  return out;
}

/// Splits per-token outputs back into one matrix per image, in each
/// sequence's original token order.
template <typename T>
std::vector<Matrix<T>> unpack(const PackedBatch<T>& batch, const Matrix<T>& outputs) {
  require(outputs.rows() == batch.total_tokens(), Errc::ShapeMismatch, "output rows do not match packed tokens");
  std::vector<Matrix<T>> pieces;
  pieces.reserve(batch.image_count());
  for (std::size_t b = 0; b < batch.image_count(); ++b) {
    const std::size_t begin = batch.offsets[b];
    const std::size_t end = batch.offsets[b + 1];
    Matrix<T> piece(end - begin, outputs.cols());
    for (std::size_t r = begin; r < end; ++r) {
      const auto src = outputs.row(r);
      std::copy(src.begin(), src.end(), piece.row(batch.source_index[r]).begin());
    }
    pieces.push_back(std::move(piece));
  }
  return pieces;
}

/// Groups cells by the window holding their top-left corner. `max_cell_side`
/// (the largest patch size) must divide the window when given; every cell is
/// checked to lie inside its window either way.
inline WindowPartition partition_windows(const PatchAssignment& a, int window_side, int max_cell_side = 0) {
  require(window_side >= 1 && a.base_patch >= 1 && window_side % a.base_patch == 0, Errc::IndivisibleWindow,
          "window side must be a positive multiple of the base patch");
  require(max_cell_side <= 0 || window_side % max_cell_side == 0, Errc::IndivisibleWindow,
          "window side must be a multiple of the largest patch size");
  require(a.image_w % window_side == 0 && a.image_h % window_side == 0, Errc::IndivisibleWindow,
          "image sides must be multiples of the window side");
  const int wx = a.image_w / window_side;
  const int wy = a.image_h / window_side;
  WindowPartition out{window_side, std::vector<std::vector<std::size_t>>(static_cast<std::size_t>(wx) * static_cast<std::size_t>(wy))};
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const Cell& c = a.cells[i];
    const int col = c.x / window_side;
    const int row = c.y / window_side;
    const int side = a.side(c);
    require(c.x + side <= (col + 1) * window_side && c.y + side <= (row + 1) * window_side, Errc::IndivisibleWindow,
            "cell at (" + std::to_string(c.x) + "," + std::to_string(c.y) + ") straddles a window border");
    out.groups[static_cast<std::size_t>(row) * static_cast<std::size_t>(wx) + static_cast<std::size_t>(col)].push_back(i);
  }
  return out;
}

}  // namespace apt
