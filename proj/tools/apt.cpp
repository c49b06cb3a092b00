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

// apt: adaptive patch tokenizer command-line tool.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "apt/commands.hpp"
#include "apt/config.hpp"
#include "apt/error.hpp"

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string tau;
  std::string scorer;
  std::string mode;
  std::optional<int> window;
  std::optional<int> patch;
  std::optional<int> scales;
  std::optional<int> d_embed;
  std::optional<int> depth;
  std::optional<int> heads;
  std::optional<int> repeats;
};

apt::RunConfig resolve(const Flags& f) {
  apt::RunConfig cfg;
  if (!f.config_path.empty()) cfg = apt::load_config(f.config_path);
  if (f.seed) cfg.seed = *f.seed;
  if (!f.out.empty()) cfg.output = f.out;
  if (!f.tau.empty()) cfg.thresholds = apt::parse_double_list("--tau", f.tau);
  if (!f.scorer.empty()) cfg.scorer = apt::parse_scorer(f.scorer);
  if (!f.mode.empty()) cfg.mode = apt::parse_mode(f.mode);
  if (f.window) cfg.window_side = *f.window;
  if (f.patch) cfg.base_patch = *f.patch;
  if (f.scales) cfg.num_scales = *f.scales;
  if (f.d_embed) cfg.d_embed = *f.d_embed;
  if (f.depth) cfg.depth = *f.depth;
  if (f.heads) cfg.heads = *f.heads;
  if (f.repeats) cfg.repeats = *f.repeats;
  apt::validate(cfg);
  return cfg;
}

// "a;b,c;d": entries separated by ';', each a comma list. A single value is
// broadcast to every scale.
std::vector<std::vector<double>> parse_sweep(const std::string& text, int num_scales) {
  std::vector<std::vector<double>> grid;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto semi = text.find(';', start);
    const std::string item = text.substr(start, semi == std::string::npos ? std::string::npos : semi - start);
    auto tau = apt::parse_double_list("--sweep", item);
    if (tau.size() == 1 && num_scales > 2) tau.assign(static_cast<std::size_t>(num_scales - 1), tau[0]);
    grid.push_back(std::move(tau));
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  return grid;
}

void emit(const apt::commands::Result& r, const std::string& json_out) {
  const std::string text = r.output.dump(2);
  if (json_out.empty()) {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(json_out);
  if (!out) throw apt::Error(apt::Errc::UnwritableOutput, json_out);
  out << text << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Content-aware multi-scale patch tokenizer"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  app.add_option("--config", f.config_path, "Flat key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", f.seed, "Seed for weights and RandomDrop");
  app.add_option("--out", f.out, "Output path (overlay PNG, feature blob, or bench JSON)");
  app.add_option("--tau", f.tau, "Thresholds per scale, finest first, e.g. 5.5,4.0");
  app.add_option("--scorer", f.scorer, "entropy | laplacian | upsampling")
      ->check(CLI::IsMember({"entropy", "laplacian", "upsampling"}));
  app.add_option("--mode", f.mode, "apt | resize | random")->check(CLI::IsMember({"apt", "resize", "random"}));
  app.add_option("--window", f.window, "Window side in pixels for window attention");
  app.add_option("--patch", f.patch, "Base patch size");
  app.add_option("--scales", f.scales, "Number of patch scales");
  app.add_option("--d-embed", f.d_embed, "Embedding width");
  app.add_option("--depth", f.depth, "Encoder depth");
  app.add_option("--heads", f.heads, "Attention heads");
  bool print_config = false;
  app.add_flag("--print-config", print_config, "Print the resolved config to stderr");

  std::string image;
  auto* patchify = app.add_subcommand("patchify", "Print the patch assignment of one image as JSON");
  patchify->add_option("image", image)->required();

  auto* visualize = app.add_subcommand("visualize", "Write the image with cell borders drawn per scale");
  visualize->add_option("image", image)->required();

  std::vector<std::string> images;
  auto* forward = app.add_subcommand("forward", "Pooled encoder features for a batch of images");
  forward->add_option("images", images)->required();

  std::string dir;
  std::string sweep;
  std::optional<double> compare;
  bool no_timing = false;
  auto* bench = app.add_subcommand("bench", "Token reduction, estimated FLOPs and timings over a directory");
  bench->add_option("dir", dir)->required();
  bench->add_option("--repeats", f.repeats, "Timing repeats per image");
  bench->add_option("--sweep", sweep, "Nondecreasing threshold grid, e.g. '-1;4.5;5.5;7' or '4,3;5.5,4'");
  bench->add_option("--compare-scorers", compare, "Retained-token fraction for the scorer comparison");
  bench->add_flag("--no-timing", no_timing, "Skip timing passes");

  auto* selfcheck = app.add_subcommand("selfcheck", "Run the built-in invariant suite");

  CLI11_PARSE(app, argc, argv);

  namespace cmd = apt::commands;
  try {
    const apt::RunConfig cfg = resolve(f);
    if (print_config) std::cerr << apt::to_config_text(cfg);
    cmd::Result result;
    std::string json_out;
    if (*patchify) {
      result = cmd::patchify(cfg, image);
      json_out = cfg.output;
    } else if (*visualize) {
      result = cmd::visualize(cfg, image, cfg.output);
    } else if (*forward) {
      result = cmd::forward(cfg, {images.begin(), images.end()});
    } else if (*bench) {
      cmd::BenchRequest req;
      req.options.repeats = cfg.repeats;
      req.options.measure_timing = !no_timing;
      if (!sweep.empty()) req.sweep = parse_sweep(sweep, cfg.num_scales);
      req.compare_fraction = compare;
      result = cmd::bench(cfg, dir, req);
      json_out = cfg.output;
    } else if (*selfcheck) {
      result = cmd::selfcheck(cfg);
    }
    emit(result, json_out);
    return result.exit_code;
  } catch (const apt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == apt::Errc::InvalidConfig ? cmd::kExitInvalid : cmd::kExitFailure;
  }
}
