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

#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apt/config.hpp"
#include "apt/densemap.hpp"
#include "apt/embedding.hpp"
#include "apt/error.hpp"
#include "apt/gradcheck.hpp"
#include "apt/packing.hpp"
#include "apt/pipeline.hpp"
#include "apt/quadtree.hpp"
#include "apt/synthetic.hpp"
#include "apt/toyvit.hpp"

namespace apt {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelfcheckReport {
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;

  bool passed() const {
    for (const auto& c : checks) {
      if (!c.passed) return false;
    }
    return !checks.empty();
  }
};

inline nlohmann::ordered_json to_json(const SelfcheckReport& r) {
  nlohmann::ordered_json j;
  j["seed"] = r.seed;
  j["passed"] = r.passed();
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& c : r.checks) {
    nlohmann::ordered_json e;
    e["name"] = c.name;
    e["passed"] = c.passed;
    e["detail"] = c.detail;
    arr.push_back(std::move(e));
  }
  j["checks"] = std::move(arr);
  return j;
}

template <typename T>
struct TensorRef {
  std::string name;
  std::span<T> data;
};

template <typename T>
std::vector<TensorRef<T>> embed_tensors(EmbedParams<T>& p) {
  std::vector<TensorRef<T>> out;
  for_each_embed_tensor(p, [&](const std::string& n, std::span<T> d, const auto&) { out.push_back({n, d}); });
  return out;
}

template <typename T>
std::vector<TensorRef<T>> vit_tensors(ToyViTParams<T>& p) {
  std::vector<TensorRef<T>> out;
  for_each_vit_tensor(p, [&](const std::string& n, std::span<T> d, const auto&) { out.push_back({n, d}); });
  return out;
}

/// Gradient-check fixture: 32x32 RGB noise image, p = 4, three scales, and
/// an assignment that uses every scale.
struct GradToy {
  Image image;
  PatchAssignment assignment;
  EmbedConfig embed_cfg;
  ToyViTConfig vit_cfg;
  EmbedParams<double> embed;
  ToyViTParams<double> vit;
  std::vector<double> readout;  // loss = readout . pool(encoder(tokens))
};

inline GradToy make_grad_toy(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x6AD));
  GradToy t;
  t.image = synthetic::noise(32, 32, 3, rng);
  t.assignment = {32, 32, 4, {}};
  auto& cells = t.assignment.cells;
  cells.push_back({0, 0, 2});
  for (int y = 0; y < 16; y += 8) {
    for (int x = 16; x < 32; x += 8) cells.push_back({x, y, 1});
  }
  cells.push_back({0, 16, 1});
  for (int y = 16; y < 32; y += 4) {
    for (int x = 8; x < 16; x += 4) cells.push_back({x, y, 0});
  }
  for (int y = 24; y < 32; y += 4) {
    for (int x = 0; x < 8; x += 4) cells.push_back({x, y, 0});
  }
  cells.push_back({16, 16, 2});
  sort_scan_order(cells);
  check_tiling(t.assignment);

  t.embed_cfg.d_embed = 32;
  t.embed_cfg.base_patch = 4;
  t.embed_cfg.channels = 3;
  t.embed_cfg.num_scales = 3;
  t.embed_cfg.pos_grid_w = 8;
  t.embed_cfg.pos_grid_h = 8;
  t.embed_cfg.seed = seed;
  t.embed = init_params<double>(t.embed_cfg);
  // Move off the zero init so every path carries gradient.
  for (auto& w : t.embed.zero_mlp.weight.flat()) w = rng.uniform(-0.2, 0.2);
  for (auto& b : t.embed.zero_mlp.bias) b = rng.uniform(-0.2, 0.2);

  t.vit_cfg = {2, 4, 32, 4.0, seed};
  t.vit = init_vit<double>(t.vit_cfg);
  auto jitter = [&](LayerNormParams<double>& n) {
    for (auto& g : n.gamma) g = 1.0 + rng.uniform(-0.3, 0.3);
    for (auto& b : n.beta) b = rng.uniform(-0.1, 0.1);
  };
  for (auto& b : t.vit.blocks) {
    jitter(b.ln1);
    jitter(b.ln2);
  }
  jitter(t.vit.final_norm);
  for (int i = 0; i < 32; ++i) t.readout.push_back(rng.uniform(-1.0, 1.0));
  return t;
}

inline double readout_loss(const GradToy& t, const Matrix<double>& tokens) {
  const std::vector<std::size_t> blocks{0, tokens.rows()};
  const auto y = pool(forward(tokens, std::span<const std::size_t>(blocks), t.vit));
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += t.readout[i] * y[i];
  return s;
}

inline Matrix<double> readout_grad(const GradToy& t, std::size_t rows) {
  Matrix<double> d(rows, t.readout.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < t.readout.size(); ++c) d(r, c) = t.readout[c] / static_cast<double>(rows);
  }
  return d;
}

/// Relative errors per tensor for: embedding params under a summed-token
/// loss, encoder params and encoder input under a pooled readout loss, and
/// embedding params through the encoder.
struct GradientReport {
  std::vector<std::pair<std::string, GradCheckResult>> embed_sum;
  std::vector<std::pair<std::string, GradCheckResult>> vit;
  std::vector<std::pair<std::string, GradCheckResult>> chained;

  double worst() const {
    double w = 0.0;
    for (const auto* v : {&embed_sum, &vit, &chained}) {
      for (const auto& [n, r] : *v) w = std::max(w, r.rel_error);
    }
    return w;
  }
};

inline GradientReport run_gradient_checks(std::uint64_t seed, double step = 1e-4, std::size_t samples = 48) {
  GradToy t = make_grad_toy(seed);
  GradientReport rep;

  // Embedding alone, loss = sum of every token component.
  {
    const auto seq = embed_image(t.image, t.assignment, t.embed, t.embed_cfg);
    Matrix<double> ones(seq.tokens.rows(), seq.tokens.cols(), 1.0);
    EmbedParams<double> grads = zeros_like(t.embed);
    embed_backward(t.image, seq, ones, t.embed, t.embed_cfg, grads);
    auto loss = [&] {
      const auto s = embed_image(t.image, t.assignment, t.embed, t.embed_cfg);
      double acc = 0.0;
      for (double v : s.tokens.flat()) acc += v;
      return acc;
    };
    auto ps = embed_tensors(t.embed);
    auto gs = embed_tensors(grads);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      rep.embed_sum.emplace_back(ps[i].name, check_gradient(ps[i].data, gs[i].data, loss, step, samples, seed + i));
    }
  }

  // Encoder alone on the embedded tokens.
  const auto seq = embed_image(t.image, t.assignment, t.embed, t.embed_cfg);
  {
    Matrix<double> tokens = seq.tokens;
    const std::vector<std::size_t> blocks{0, tokens.rows()};
    ForwardCache<double> cache;
    (void)pool(forward(tokens, std::span<const std::size_t>(blocks), t.vit, &cache));
    ToyViTParams<double> grads = zeros_like(t.vit);
    const Matrix<double> d_in = backward(cache, readout_grad(t, tokens.rows()), t.vit, grads);
    auto loss = [&] { return readout_loss(t, tokens); };
    auto ps = vit_tensors(t.vit);
    auto gs = vit_tensors(grads);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      rep.vit.emplace_back(ps[i].name, check_gradient(ps[i].data, gs[i].data, loss, step, samples, seed + 100 + i));
    }
    rep.vit.emplace_back("input", check_gradient(tokens.flat(), d_in.flat(), loss, step, samples, seed + 99));
  }

  // Embedding parameters through the encoder.
  {
    const std::vector<std::size_t> blocks{0, seq.tokens.rows()};
    ForwardCache<double> cache;
    (void)forward(seq.tokens, std::span<const std::size_t>(blocks), t.vit, &cache);
    ToyViTParams<double> vgrads = zeros_like(t.vit);
    const Matrix<double> d_tokens = backward(cache, readout_grad(t, seq.tokens.rows()), t.vit, vgrads);
    EmbedParams<double> grads = zeros_like(t.embed);
    embed_backward(t.image, seq, d_tokens, t.embed, t.embed_cfg, grads);
    auto loss = [&] { return readout_loss(t, embed_image(t.image, t.assignment, t.embed, t.embed_cfg).tokens); };
    auto ps = embed_tensors(t.embed);
    auto gs = embed_tensors(grads);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      rep.chained.emplace_back(ps[i].name, check_gradient(ps[i].data, gs[i].data, loss, step, samples, seed + 200 + i));
    }
  }
  return rep;
}

inline double max_relative_diff(std::span<const float> a, std::span<const float> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(static_cast<double>(a[i]) - b[i]));
    den = std::max(den, std::abs(static_cast<double>(b[i])));
  }
  return den > 0.0 ? num / den : num;
}

namespace detail {

inline CheckResult run_check(const std::string& name, const std::function<std::string()>& body) {
  try {
    return {name, true, body()};
  } catch (const std::exception& e) {
    return {name, false, e.what()};
  }
}

}  // namespace detail

/// Invariant suite over built-in synthetic images. Verdicts do not depend
/// on the seed; only the sampled images and weights do.
inline SelfcheckReport run_selfcheck(const RunConfig& cfg) {
  validate(cfg);
  SelfcheckReport rep;
  rep.seed = cfg.seed;
  const int side = 4 * cfg.max_patch_side();
  Rng rng(mix_seed(cfg.seed, 0x5E1F));
  std::vector<Image> images;
  images.push_back(synthetic::constant(side, side, 3, 0.25f));
  images.push_back(synthetic::half_noise(side, side, 3, rng));
  images.push_back(synthetic::horizontal_ramp(side, side, 3));
  for (int i = 0; i < 3; ++i) images.push_back(synthetic::mosaic(side, side, 3, rng, cfg.base_patch));
  const auto policy = cfg.policy();

  rep.checks.push_back(detail::run_check("partition", [&] {
    for (const auto& img : images) {
      const auto a = assign_patches(img, policy);
      check_tiling(a);
      require(token_count(a) <= a.base_tokens(), Errc::InvariantViolation, "more tokens than the base grid");
    }
    return std::to_string(images.size()) + " images tile exactly";
  }));

  rep.checks.push_back(detail::run_check("monotonicity", [&] {
    const std::vector<double> grid{-1.0, 0.5, 1.0, 2.0, 3.0, 4.5, 5.5, 7.0, 9.0};
    for (const auto& img : images) {
      std::size_t prev = SIZE_MAX;
      for (double tau : grid) {
        PatchPolicyConfig pc = policy;
        std::fill(pc.thresholds.begin(), pc.thresholds.end(), tau);
        const std::size_t n = token_count(assign_patches(img, pc));
        require(n <= prev, Errc::InvariantViolation, "token count rose with the threshold");
        prev = n;
      }
    }
    return std::string("token counts nonincreasing over a 9-point grid");
  }));

  rep.checks.push_back(detail::run_check("zero_init", [&] {
    RunConfig apt_cfg = cfg;
    apt_cfg.mode = EmbedMode::APT;
    RunConfig resize_cfg = cfg;
    resize_cfg.mode = EmbedMode::ResizeOnly;
    const Pipeline a(apt_cfg), b(resize_cfg);
    for (const auto& img : images) {
      const auto asg = a.patchify(img);
      require(a.embed(img, asg).tokens == b.embed(img, asg).tokens, Errc::InvariantViolation,
              "APT and resize-only tokens differ at zero init");
    }
    return std::string("APT == resize-only, bitwise");
  }));

  rep.checks.push_back(detail::run_check("packing_equivalence", [&] {
    const Pipeline pipe(cfg);
    std::vector<Image> batch(images.begin() + 1, images.end());
    const auto packed = pipe.forward(batch);
    double worst = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto single = pipe.forward({batch[i]});
      worst = std::max(worst, max_relative_diff(packed.pooled[i], single.pooled[0]));
    }
    require(worst <= 1e-5, Errc::InvariantViolation, "packed and per-image outputs differ: " + std::to_string(worst));
    std::ostringstream os;
    os << "max relative diff " << worst;
    return os.str();
  }));

  rep.checks.push_back(detail::run_check("densemap_cover", [&] {
    for (const auto& img : images) {
      const auto a = assign_patches(img, policy);
      Matrix<float> tokens(a.cells.size(), 4);
      for (std::size_t i = 0; i < a.cells.size(); ++i) {
        for (std::size_t c = 0; c < 4; ++c) tokens(i, c) = static_cast<float>(i * 4 + c);
      }
      const auto map = reconstruct(tokens, a);
      for (std::size_t i = 0; i < a.cells.size(); ++i) {
        const Cell& cell = a.cells[i];
        const int n = 1 << cell.scale;
        for (int dy = 0; dy < n; ++dy) {
          for (int dx = 0; dx < n; ++dx) {
            const auto v = map.at(cell.x / a.base_patch + dx, cell.y / a.base_patch + dy);
            require(std::equal(v.begin(), v.end(), tokens.row(i).begin()), Errc::InvariantViolation,
                    "footprint not constant");
          }
        }
      }
    }
    return std::string("every base cell written once");
  }));

  rep.checks.push_back(detail::run_check("gradients", [&] {
    const auto g = run_gradient_checks(cfg.seed, 1e-4, 24);
    require(g.worst() <= 1e-3, Errc::InvariantViolation, "gradient mismatch " + std::to_string(g.worst()));
    std::ostringstream os;
    os << "worst relative error " << g.worst();
    return os.str();
  }));
  return rep;
}

}  // namespace apt
