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

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "apt/embedding.hpp"
#include "apt/error.hpp"
#include "apt/quadtree.hpp"
#include "apt/scoring.hpp"
#include "apt/toyvit.hpp"

namespace apt {

/// Flat run configuration shared by every CLI command. The defaults are a
/// 224/16 profile with three scales and thresholds (5.5, 4.0).
struct RunConfig {
  int base_patch = 16;
  int num_scales = 3;
  std::vector<double> thresholds{5.5, 4.0};
  ScorerKind scorer = ScorerKind::Entropy;
  int bins = 256;
  int d_embed = 192;
  int depth = 4;
  int heads = 4;
  double mlp_ratio = 4.0;
  EmbedMode mode = EmbedMode::APT;
  std::uint64_t seed = 0;
  int window_side = 0;  // 0 disables window attention
  int pos_grid = 64;    // positional table side, in base cells
  int repeats = 3;
  std::string input;
  std::string output;

  PatchPolicyConfig policy() const { return {base_patch, num_scales, thresholds, {scorer, bins}}; }

  EmbedConfig embed(int channels) const {
    EmbedConfig e;
    e.d_embed = d_embed;
    e.base_patch = base_patch;
    e.channels = channels;
    e.num_scales = num_scales;
    e.pos_grid_w = pos_grid;
    e.pos_grid_h = pos_grid;
    e.mode = mode;
    e.seed = seed;
    return e;
  }

  ToyViTConfig vit() const { return {depth, heads, d_embed, mlp_ratio, seed}; }

  int max_patch_side() const { return base_patch << (num_scales - 1); }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Field-level problems, empty when the config is usable.
inline std::vector<std::string> config_errors(const RunConfig& c) {
  std::vector<std::string> errs;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) errs.push_back(msg);
  };
  check(c.base_patch >= 1 && c.base_patch <= 1024, "base_patch: must be in [1, 1024]");
  check(c.num_scales >= 1 && c.num_scales <= 8, "num_scales: must be in [1, 8]");
  check(c.thresholds.size() == static_cast<std::size_t>(std::max(c.num_scales - 1, 0)),
        "thresholds: expected " + std::to_string(std::max(c.num_scales - 1, 0)) + " values (num_scales - 1), got " +
            std::to_string(c.thresholds.size()));
  check(c.bins >= 2, "bins: must be >= 2");
  check(c.d_embed >= 1, "d_embed: must be >= 1");
  check(c.depth >= 0, "depth: must be >= 0");
  check(c.heads >= 1 && c.d_embed % std::max(c.heads, 1) == 0, "heads: must be >= 1 and divide d_embed");
  check(c.mlp_ratio > 0.0, "mlp_ratio: must be positive");
  check(c.pos_grid >= 1, "pos_grid: must be >= 1");
  check(c.repeats >= 1, "repeats: must be >= 1");
  check(c.window_side == 0 || static_cast<long>(c.pos_grid) * c.base_patch >= c.window_side,
        "pos_grid: positional table must span at least one window");
  if (c.window_side != 0) {
    check(c.window_side > 0 && c.num_scales >= 1 && c.num_scales <= 8 && c.base_patch >= 1 &&
              c.window_side % c.max_patch_side() == 0,
          "window: must be a positive multiple of the largest patch size (base_patch * 2^(num_scales-1))");
  }
  return errs;
}

inline void validate(const RunConfig& c) {
  const auto errs = config_errors(c);
  if (errs.empty()) return;
  std::string msg = "invalid configuration";
  for (const auto& e : errs) msg += "\n  " + e;
  fail(Errc::InvalidConfig, msg);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename N>
N parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  N v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    fail(Errc::InvalidConfig, std::string(key) + ": cannot parse '" + std::string(text) + "'");
  }
  return v;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Comma-separated reals, e.g. "5.5,4.0". Empty text gives an empty list.
inline std::vector<double> parse_double_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  text = detail::trim(text);
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(detail::parse_number<double>(key, text.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string format_double_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += detail::format_double(v[i]);
  }
  return s;
}

/// Applies one `key = value` setting.
inline void set_config_value(RunConfig& c, std::string_view key, std::string_view value) {
  value = detail::trim(value);
  if (key == "base_patch") c.base_patch = detail::parse_number<int>(key, value);
  else if (key == "num_scales") c.num_scales = detail::parse_number<int>(key, value);
  else if (key == "thresholds") c.thresholds = parse_double_list(key, value);
  else if (key == "scorer") c.scorer = parse_scorer(value);
  else if (key == "bins") c.bins = detail::parse_number<int>(key, value);
  else if (key == "d_embed") c.d_embed = detail::parse_number<int>(key, value);
  else if (key == "depth") c.depth = detail::parse_number<int>(key, value);
  else if (key == "heads") c.heads = detail::parse_number<int>(key, value);
  else if (key == "mlp_ratio") c.mlp_ratio = detail::parse_number<double>(key, value);
  else if (key == "mode") c.mode = parse_mode(value);
  else if (key == "seed") c.seed = detail::parse_number<std::uint64_t>(key, value);
  else if (key == "window") c.window_side = detail::parse_number<int>(key, value);
  else if (key == "pos_grid") c.pos_grid = detail::parse_number<int>(key, value);
  else if (key == "repeats") c.repeats = detail::parse_number<int>(key, value);
  else if (key == "input") c.input = std::string(value);
  else if (key == "output") c.output = std::string(value);
  else fail(Errc::InvalidConfig, "unknown config key '" + std::string(key) + "'");
}

/// Parses `key = value` lines; `#` starts a comment.
inline RunConfig parse_config(std::string_view text, RunConfig base = {}) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(Errc::InvalidConfig, "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    set_config_value(base, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) fail(Errc::FileNotFound, path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

/// Canonical text form; parse_config(to_config_text(c)) == c.
inline std::string to_config_text(const RunConfig& c) {
  std::ostringstream os;
  os << "base_patch = " << c.base_patch << '\n'
     << "num_scales = " << c.num_scales << '\n'
     << "thresholds = " << format_double_list(c.thresholds) << '\n'
     << "scorer = " << scorer_name(c.scorer) << '\n'
     << "bins = " << c.bins << '\n'
     << "d_embed = " << c.d_embed << '\n'
     << "depth = " << c.depth << '\n'
     << "heads = " << c.heads << '\n'
     << "mlp_ratio = " << detail::format_double(c.mlp_ratio) << '\n'
     << "mode = " << mode_name(c.mode) << '\n'
     << "seed = " << c.seed << '\n'
     << "window = " << c.window_side << '\n'
     << "pos_grid = " << c.pos_grid << '\n'
     << "repeats = " << c.repeats << '\n'
     << "input = " << c.input << '\n'
     << "output = " << c.output << '\n';
  return os.str();
}

}  // namespace apt
