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

#include <png.h>

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include "apt/error.hpp"
#include "apt/image.hpp"

namespace apt {

enum class ImageFormat { Png, Ppm, Unknown };

inline ImageFormat sniff_format(const std::vector<unsigned char>& bytes) {
  static constexpr std::array<unsigned char, 8> kPngMagic{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= kPngMagic.size() && std::equal(kPngMagic.begin(), kPngMagic.end(), bytes.begin())) {
    return ImageFormat::Png;
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return ImageFormat::Ppm;
  return ImageFormat::Unknown;
}

namespace detail {

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) fail(Errc::FileNotFound, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::FileNotFound, path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Image from_bytes(int w, int h, int c, const unsigned char* px) {
  Image img(w, h, c);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>(px[i]) / 255.0f;
  return img;
}

inline Image decode_png(const std::vector<unsigned char>& bytes, const std::string& name) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    fail(Errc::CorruptData, name + ": " + png.message);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  const bool alpha = (png.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  png.format = color ? (alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB) : (alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY);
  const int src_channels = static_cast<int>(PNG_IMAGE_PIXEL_CHANNELS(png.format));
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    fail(Errc::CorruptData, name + ": " + msg);
  }
  const int w = static_cast<int>(png.width);
  const int h = static_cast<int>(png.height);
  if (!alpha) return from_bytes(w, h, src_channels, buf.data());

  std::cerr << "warning: " << name << ": alpha channel dropped\n";
  const int c = src_channels - 1;
  std::vector<unsigned char> stripped;
  stripped.reserve(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(c));
  for (std::size_t i = 0; i < buf.size(); i += static_cast<std::size_t>(src_channels)) {
    stripped.insert(stripped.end(), buf.begin() + static_cast<std::ptrdiff_t>(i),
                    buf.begin() + static_cast<std::ptrdiff_t>(i) + c);
  }
  return from_bytes(w, h, c, stripped.data());
}

inline Image decode_ppm(const std::vector<unsigned char>& bytes, const std::string& name) {
  std::size_t pos = 2;
  auto next_int = [&]() -> long {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) fail(Errc::CorruptData, name + ": bad PPM header");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > (1L << 24)) fail(Errc::CorruptData, name + ": PPM header value too large");
    }
    return v;
  };
  const long w = next_int();
  const long h = next_int();
  const long maxval = next_int();
  if (w < 1 || h < 1) fail(Errc::CorruptData, name + ": PPM dimensions must be positive");
  if (maxval != 255) fail(Errc::UnsupportedFormat, name + ": only 8-bit PPM (maxval 255) is supported");
  // Exactly one whitespace byte separates the header from the raster.
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) fail(Errc::CorruptData, name + ": bad PPM header");
  ++pos;
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  if (bytes.size() - pos < need) fail(Errc::CorruptData, name + ": truncated PPM raster");
  return from_bytes(static_cast<int>(w), static_cast<int>(h), 3, bytes.data() + pos);
}

inline std::vector<unsigned char> to_bytes(const Image& img) {
  std::vector<unsigned char> out(img.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<unsigned char>(std::lround(std::clamp(img.data[i], 0.0f, 1.0f) * 255.0f));
  }
  return out;
}

}  // namespace detail

/// Decodes a PNG or binary PPM (P6), detected by magic bytes rather than
/// extension.
inline Image load_image(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  switch (sniff_format(bytes)) {
    case ImageFormat::Png: return detail::decode_png(bytes, path.string());
    case ImageFormat::Ppm: return detail::decode_ppm(bytes, path.string());
    case ImageFormat::Unknown: break;
  }
  fail(Errc::UnsupportedFormat, path.string() + ": not a PNG or P6 PPM file");
}

inline void save_png(const Image& img, const std::filesystem::path& path) {
  validate(img);
  auto bytes = detail::to_bytes(img);
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
    fail(Errc::UnwritableOutput, path.string() + ": " + png.message);
  }
}

inline void save_ppm(const Image& img, const std::filesystem::path& path) {
  validate(img);
  const Image rgb = img.channels == 3 ? img : [&] {
    Image out(img.width, img.height, 3);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
      out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = img.data[i];
    }
    return out;
  }();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::UnwritableOutput, path.string());
  out << "P6\n" << rgb.width << ' ' << rgb.height << "\n255\n";
  const auto bytes = detail::to_bytes(rgb);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::UnwritableOutput, path.string());
}

}  // namespace apt
