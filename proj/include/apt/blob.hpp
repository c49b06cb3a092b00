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

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apt/densemap.hpp"
#include "apt/embedding.hpp"
#include "apt/error.hpp"
#include "apt/toyvit.hpp"

namespace apt {

/// Flat little-endian float32 blob with a JSON sidecar (`<blob>.json`)
/// listing each tensor's name, shape and byte offset.
struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> data;
};

struct Blob {
  std::vector<NamedTensor> tensors;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();

  const NamedTensor& find(const std::string& name) const {
    for (const auto& t : tensors) {
      if (t.name == name) return t;
    }
    fail(Errc::CorruptData, "blob has no tensor '" + name + "'");
  }
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& blob) {
  return std::filesystem::path(blob.string() + ".json");
}

inline void write_blob(const Blob& blob, const std::filesystem::path& path) {
  std::vector<unsigned char> bytes;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& t : blob.tensors) {
    std::size_t expect = 1;
    for (auto s : t.shape) expect *= s;
    require(expect == t.data.size(), Errc::ShapeMismatch, "tensor '" + t.name + "' shape does not match data");
    nlohmann::ordered_json e;
    e["name"] = t.name;
    e["shape"] = t.shape;
    e["offset"] = bytes.size();
    e["bytes"] = t.data.size() * 4;
    entries.push_back(std::move(e));
    for (float v : t.data) {
      const auto u = std::bit_cast<std::uint32_t>(v);
      for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<unsigned char>((u >> (8 * b)) & 0xffu));
    }
  }
  nlohmann::ordered_json side;
  side["format"] = "float32-le";
  side["total_bytes"] = bytes.size();
  side["tensors"] = std::move(entries);
  side["meta"] = blob.meta;

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::UnwritableOutput, path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  std::ofstream js(sidecar_path(path));
  if (!js) fail(Errc::UnwritableOutput, sidecar_path(path).string());
  js << side.dump(2) << '\n';
  if (!out || !js) fail(Errc::UnwritableOutput, path.string());
}

inline Blob read_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::FileNotFound, path.string());
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::ifstream js(sidecar_path(path));
  if (!js) fail(Errc::FileNotFound, sidecar_path(path).string());
  Blob blob;
  try {
    const auto side = nlohmann::ordered_json::parse(js);
    blob.meta = side.value("meta", nlohmann::ordered_json::object());
    for (const auto& e : side.at("tensors")) {
      NamedTensor t;
      t.name = e.at("name").get<std::string>();
      t.shape = e.at("shape").get<std::vector<std::size_t>>();
      const auto offset = e.at("offset").get<std::size_t>();
      const auto n = e.at("bytes").get<std::size_t>();
      if (offset + n > bytes.size() || n % 4 != 0) fail(Errc::CorruptData, "tensor '" + t.name + "' outside blob");
      t.data.resize(n / 4);
      for (std::size_t i = 0; i < t.data.size(); ++i) {
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(bytes[offset + 4 * i + static_cast<std::size_t>(b)]) << (8 * b);
        t.data[i] = std::bit_cast<float>(u);
      }
      blob.tensors.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::CorruptData, sidecar_path(path).string() + ": " + e.what());
  }
  return blob;
}

template <typename T>
Blob to_blob(const EmbedParams<T>& params) {
  Blob blob;
  for_each_embed_tensor(params, [&](const std::string& name, std::span<const T> data, const std::vector<std::size_t>& shape) {
    blob.tensors.push_back({name, shape, std::vector<float>(data.begin(), data.end())});
  });
  return blob;
}

template <typename T>
Blob to_blob(const ToyViTParams<T>& params) {
  Blob blob;
  for_each_vit_tensor(params, [&](const std::string& name, std::span<const T> data, const std::vector<std::size_t>& shape) {
    blob.tensors.push_back({name, shape, std::vector<float>(data.begin(), data.end())});
  });
  return blob;
}

template <typename T>
Blob to_blob(const FeatureMap<T>& map) {
  Blob blob;
  blob.tensors.push_back({"features",
                          {static_cast<std::size_t>(map.grid_h), static_cast<std::size_t>(map.grid_w), map.features.cols()},
                          std::vector<float>(map.features.flat().begin(), map.features.flat().end())});
  return blob;
}

/// Loads tensors back into an already-shaped parameter set.
template <typename T>
void load_into(const Blob& blob, EmbedParams<T>& params) {
  for_each_embed_tensor(params, [&](const std::string& name, std::span<T> data, const std::vector<std::size_t>& shape) {
    const auto& t = blob.find(name);
    require(t.shape == shape && t.data.size() == data.size(), Errc::ShapeMismatch, "tensor '" + name + "' shape");
    std::copy(t.data.begin(), t.data.end(), data.begin());
  });
}

}  // namespace apt
