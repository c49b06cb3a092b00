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
#include <cassert>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "apt/error.hpp"

namespace apt {

/// Decoded raster, row-major, interleaved channels, intensities in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, int c, float fill = 0.0f)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(c),
             fill) {}

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels) +
           static_cast<std::size_t>(c);
  }
  float& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  float at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  friend bool operator==(const Image&, const Image&) = default;
};

inline void validate(const Image& img) {
  require(img.width >= 1 && img.height >= 1, Errc::InvalidDimensions,
          "image must be at least 1x1");
  require(img.channels == 1 || img.channels == 3, Errc::InvalidDimensions,
          "image must have 1 or 3 channels");
  require(img.data.size() == img.pixel_count() * static_cast<std::size_t>(img.channels),
          Errc::CorruptData, "pixel buffer size does not match dimensions");
  for (float v : img.data) {
    require(v >= 0.0f && v <= 1.0f, Errc::CorruptData, "intensity outside [0, 1]");
  }
}

/// Read-only square-or-rectangular window into a single-channel image.
struct ImageView {
  const Image* image = nullptr;
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  ImageView() = default;
  explicit ImageView(const Image& img) : image(&img), width(img.width), height(img.height) {}
  ImageView(const Image& img, int x0, int y0, int w, int h)
      : image(&img), x(x0), y(y0), width(w), height(h) {
    assert(x0 >= 0 && y0 >= 0 && x0 + w <= img.width && y0 + h <= img.height);
  }

  float operator()(int col, int row) const { return image->at(x + col, y + row, 0); }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
};

inline Image crop(const Image& img, int x0, int y0, int w, int h) {
  require(x0 >= 0 && y0 >= 0 && w >= 1 && h >= 1 && x0 + w <= img.width && y0 + h <= img.height,
          Errc::InvalidDimensions, "crop rectangle outside image");
  Image out(w, h, img.channels);
  const std::size_t row_len = static_cast<std::size_t>(w) * static_cast<std::size_t>(img.channels);
  for (int y = 0; y < h; ++y) {
    const auto src = img.data.begin() + static_cast<std::ptrdiff_t>(img.index(x0, y0 + y));
    std::copy(src, src + static_cast<std::ptrdiff_t>(row_len),
              out.data.begin() + static_cast<std::ptrdiff_t>(out.index(0, y)));
  }
  return out;
}

inline Image crop(const ImageView& v) { return crop(*v.image, v.x, v.y, v.width, v.height); }

/// BT.601 luma. One-channel input is returned unchanged.
inline Image to_grayscale(const Image& img) {
  if (img.channels == 1) return img;
  require(img.channels == 3, Errc::InvalidDimensions, "grayscale needs 1 or 3 channels");
  Image out(img.width, img.height, 1);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const float r = img.data[3 * i];
    const float g = img.data[3 * i + 1];
    const float b = img.data[3 * i + 2];
    out.data[i] = std::clamp(0.299f * r + 0.587f * g + 0.114f * b, 0.0f, 1.0f);
  }
  return out;
}

namespace detail {

struct LerpTap {
  int lo;
  int hi;
  float frac;
};

// Half-pixel-center source sampling along one axis.
inline std::vector<LerpTap> bilinear_taps(int in, int out) {
  std::vector<LerpTap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (int i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(src));
    const int hi = std::min(lo + 1, in - 1);
    taps[static_cast<std::size_t>(i)] = {lo, hi, static_cast<float>(src - lo)};
  }
  return taps;
}

}  // namespace detail

/// Bilinear resampling with half-pixel centers and edge clamping.
inline Image resize_bilinear(const Image& img, int out_w, int out_h) {
  require(out_w >= 1 && out_h >= 1, Errc::InvalidDimensions, "resize target must be positive");
  if (out_w == img.width && out_h == img.height) return img;
  const auto xs = detail::bilinear_taps(img.width, out_w);
  const auto ys = detail::bilinear_taps(img.height, out_h);
  Image out(out_w, out_h, img.channels);
  for (int y = 0; y < out_h; ++y) {
    const auto& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < out_w; ++x) {
      const auto& tx = xs[static_cast<std::size_t>(x)];
      for (int c = 0; c < img.channels; ++c) {
        const float a = img.at(tx.lo, ty.lo, c);
        const float b = img.at(tx.hi, ty.lo, c);
        const float d = img.at(tx.lo, ty.hi, c);
        const float e = img.at(tx.hi, ty.hi, c);
        const float top = a + (b - a) * tx.frac;
        const float bot = d + (e - d) * tx.frac;
        out.at(x, y, c) = std::clamp(top + (bot - top) * ty.frac, 0.0f, 1.0f);
      }
    }
  }
  return out;
}

}  // namespace apt
