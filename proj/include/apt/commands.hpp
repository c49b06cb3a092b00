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

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apt/bench.hpp"
#include "apt/blob.hpp"
#include "apt/config.hpp"
#include "apt/error.hpp"
#include "apt/imageio.hpp"
#include "apt/overlay.hpp"
#include "apt/packing.hpp"
#include "apt/pipeline.hpp"
#include "apt/quadtree.hpp"
#include "apt/selfcheck.hpp"

// One function per CLI subcommand; tools/apt.cpp only parses arguments.
namespace apt::commands {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalid = 2;  // bad config, or a bench with per-image failures

struct Result {
  int exit_code = kExitOk;
  nlohmann::ordered_json output;
};

inline PreparedImage load_prepared(const RunConfig& cfg, const std::filesystem::path& path) {
  PreparedImage p = prepare_image(load_image(path), cfg);
  if (p.resized) {
    std::cerr << "notice: " << path.string() << " resized from " << p.source_w << "x" << p.source_h << " to "
              << p.image.width << "x" << p.image.height << "\n";
  }
  return p;
}

inline Result patchify(const RunConfig& cfg, const std::filesystem::path& path) {
  validate(cfg);
  const PreparedImage img = load_prepared(cfg, path);
  const PatchAssignment a = assign_patches(img.image, cfg.policy());
  nlohmann::ordered_json j;
  j["image"] = path.string();
  j["source_w"] = img.source_w;
  j["source_h"] = img.source_h;
  j["resized"] = img.resized;
  j["assignment"] = to_json(a);
  nlohmann::ordered_json stats;
  stats["base_tokens"] = a.base_tokens();
  stats["apt_tokens"] = token_count(a);
  stats["reduction_ratio"] = reduction_ratio(a);
  if (cfg.window_side > 0) {
    const auto parts = partition_windows(a, cfg.window_side, cfg.max_patch_side());
    std::vector<std::size_t> sizes;
    for (const auto& g : parts.groups) sizes.push_back(g.size());
    stats["window_side"] = cfg.window_side;
    stats["window_token_counts"] = sizes;
  }
  j["stats"] = std::move(stats);
  return {kExitOk, std::move(j)};
}

inline Result visualize(const RunConfig& cfg, const std::filesystem::path& path, const std::filesystem::path& out) {
  validate(cfg);
  require(!out.empty(), Errc::UnwritableOutput, "visualize needs an output path (--out)");
  const PreparedImage img = load_prepared(cfg, path);
  const PatchAssignment a = assign_patches(img.image, cfg.policy());
  save_png(render_overlay(img.image, a), out);
  nlohmann::ordered_json j;
  j["image"] = path.string();
  j["out"] = out.string();
  j["apt_tokens"] = token_count(a);
  j["base_tokens"] = a.base_tokens();
  return {kExitOk, std::move(j)};
}

/// Pooled features for every input, written as blob + sidecar to cfg.output.
inline Result forward(const RunConfig& cfg, const std::vector<std::filesystem::path>& paths) {
  validate(cfg);
  require(!paths.empty(), Errc::EmptyBatch, "forward needs at least one image");
  require(!cfg.output.empty(), Errc::UnwritableOutput, "forward needs an output path (--out)");
  std::vector<Image> images;
  for (const auto& p : paths) images.push_back(load_prepared(cfg, p).image);
  const Pipeline pipe(cfg);
  const ForwardResult r = pipe.forward(images);

  Blob blob;
  NamedTensor pooled{"pooled", {r.pooled.size(), static_cast<std::size_t>(cfg.d_embed)}, {}};
  for (const auto& v : r.pooled) pooled.data.insert(pooled.data.end(), v.begin(), v.end());
  blob.tensors.push_back(std::move(pooled));
  std::vector<std::string> names;
  for (const auto& p : paths) names.push_back(p.string());
  blob.meta["images"] = names;
  blob.meta["token_counts"] = r.token_counts;
  blob.meta["offsets"] = r.offsets;
  blob.meta["config"] = to_config_text(cfg);
  write_blob(blob, cfg.output);

  nlohmann::ordered_json j;
  j["out"] = cfg.output;
  j["images"] = names;
  j["token_counts"] = r.token_counts;
  j["offsets"] = r.offsets;
  if (cfg.window_side > 0) j["attention_blocks"] = r.blocks;
  j["estimated_flops"] = r.estimated_flops;
  return {kExitOk, std::move(j)};
}

struct BenchRequest {
  BenchOptions options;
  std::vector<std::vector<double>> sweep;   // empty: single run
  std::optional<double> compare_fraction;   // matched-fraction scorer table
};

inline Result bench(const RunConfig& cfg, const std::filesystem::path& dir, const BenchRequest& req) {
  validate(cfg);
  nlohmann::ordered_json j;
  bool partial = false;
  if (req.sweep.empty()) {
    const auto rep = run_bench(dir, cfg, req.options);
    partial = rep.partial();
    j = to_json(rep);
  } else {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& rep : sweep_thresholds(dir, cfg, req.sweep, req.options)) {
      partial = partial || rep.partial();
      nlohmann::ordered_json e;
      e["thresholds"] = rep.config.thresholds;
      e["report"] = to_json(rep);
      arr.push_back(std::move(e));
    }
    j["sweep"] = std::move(arr);
  }
  if (req.compare_fraction) {
    std::vector<BenchFailure> failures;
    std::vector<PreparedImage> images;
    for (auto& li : detail::load_corpus(dir, cfg, failures, worker_count())) images.push_back(std::move(li.prepared));
    j["scorer_comparison"] = to_json(compare_scorers(images, cfg, *req.compare_fraction), *req.compare_fraction);
  }
  return {partial ? kExitInvalid : kExitOk, std::move(j)};
}

inline Result selfcheck(const RunConfig& cfg) {
  const auto rep = run_selfcheck(cfg);
  return {rep.passed() ? kExitOk : kExitFailure, to_json(rep)};
}

}  // namespace apt::commands
