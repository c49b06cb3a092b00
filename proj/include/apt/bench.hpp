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
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "apt/config.hpp"
#include "apt/error.hpp"
#include "apt/imageio.hpp"
#include "apt/packing.hpp"
#include "apt/pipeline.hpp"
#include "apt/toyvit.hpp"

namespace apt {

/// Worker count: APT_NUM_THREADS when set, otherwise the hardware count.
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("APT_NUM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<unsigned>(v);
  }
  return n;
}

/// Runs fn(i) for i in [0, n) on a small pool. The first exception thrown
/// by any task is rethrown after all workers join.
template <typename F>
void parallel_for(std::size_t n, F&& fn, unsigned threads = worker_count()) {
  threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) fail(Errc::FileNotFound, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png" || ext == ".ppm") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct BenchOptions {
  int repeats = 3;
  bool measure_timing = true;
  unsigned threads = 0;  // 0 means worker_count()
};

struct ImageStats {
  std::string path;
  std::size_t base_tokens = 0;
  std::size_t apt_tokens = 0;
  double reduction_ratio = 0.0;
  double score_time_ms = 0.0;
  double embed_time_ms = 0.0;
  double forward_time_ms = 0.0;
};

struct BenchFailure {
  std::string path;
  std::string error;
};

struct BenchReport {
  RunConfig config;
  std::vector<ImageStats> images;  // sorted by path
  std::vector<BenchFailure> failures;
  double mean_reduction = 0.0;
  double median_reduction = 0.0;
  double mean_apt_tokens = 0.0;
  double tokens_per_second = 0.0;
  double flop_ratio = 1.0;  // estimated adaptive / uniform encoder cost

  bool partial() const { return !failures.empty(); }
};

inline nlohmann::ordered_json to_json(const BenchReport& r) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json images = nlohmann::ordered_json::array();
  for (const auto& s : r.images) {
    nlohmann::ordered_json e;
    e["path"] = s.path;
    e["base_tokens"] = s.base_tokens;
    e["apt_tokens"] = s.apt_tokens;
    e["reduction_ratio"] = s.reduction_ratio;
    e["score_time_ms"] = s.score_time_ms;
    e["embed_time_ms"] = s.embed_time_ms;
    e["forward_time_ms"] = s.forward_time_ms;
    images.push_back(std::move(e));
  }
  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  for (const auto& f : r.failures) failures.push_back({{"path", f.path}, {"error", f.error}});
  j["images"] = std::move(images);
  j["failures"] = std::move(failures);
  nlohmann::ordered_json agg;
  agg["image_count"] = r.images.size();
  agg["mean_reduction"] = r.mean_reduction;
  agg["median_reduction"] = r.median_reduction;
  agg["mean_apt_tokens"] = r.mean_apt_tokens;
  agg["tokens_per_second"] = r.tokens_per_second;
  agg["estimated_flop_ratio"] = r.flop_ratio;
  j["aggregate"] = std::move(agg);
  j["config"] = to_config_text(r.config);
  return j;
}

namespace detail {

struct LoadedImage {
  std::string path;
  PreparedImage prepared;
};

inline std::vector<LoadedImage> load_corpus(const std::filesystem::path& dir, const RunConfig& cfg,
                                            std::vector<BenchFailure>& failures, unsigned threads) {
  const auto paths = list_images(dir);
  std::vector<std::optional<LoadedImage>> slots(paths.size());
  std::vector<std::string> errors(paths.size());
  parallel_for(
      paths.size(),
      [&](std::size_t i) {
        try {
          slots[i] = LoadedImage{paths[i].string(), prepare_image(load_image(paths[i]), cfg)};
        } catch (const Error& e) {
          errors[i] = e.what();
        }
      },
      threads);
  std::vector<LoadedImage> out;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (slots[i]) out.push_back(std::move(*slots[i]));
    else failures.push_back({paths[i].string(), errors[i]});
  }
  if (out.empty()) fail(Errc::NoImagesFound, "no decodable .png/.ppm images in " + dir.string());
  return out;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

template <typename F>
double time_ms(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

inline BenchReport bench_loaded(const std::vector<LoadedImage>& corpus, std::vector<BenchFailure> failures,
                                const RunConfig& cfg, const BenchOptions& opts) {
  const Pipeline pipe(cfg);
  const unsigned threads = opts.threads ? opts.threads : worker_count();
  BenchReport rep;
  rep.config = cfg;
  rep.failures = std::move(failures);
  rep.images.resize(corpus.size());

  // Token statistics are deterministic and computed in parallel.
  parallel_for(
      corpus.size(),
      [&](std::size_t i) {
        const auto a = pipe.patchify(corpus[i].prepared.image);
        auto& s = rep.images[i];
        s.path = corpus[i].path;
        s.base_tokens = a.base_tokens();
        s.apt_tokens = token_count(a);
        s.reduction_ratio = reduction_ratio(a);
      },
      threads);

  // Timings are taken one image at a time.
  if (opts.measure_timing) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const Image& img = corpus[i].prepared.image;
      std::vector<double> score_t, embed_t, fwd_t;
      for (int r = 0; r < std::max(1, opts.repeats); ++r) {
        PatchAssignment a;
        score_t.push_back(time_ms([&] { a = pipe.patchify(img); }));
        TokenSequence<float> seq;
        embed_t.push_back(time_ms([&] { seq = pipe.embed(img, a); }));
        std::vector<TokenSequence<float>> one{std::move(seq)};
        const auto batch = pipe.pack_batch(one, {a});
        fwd_t.push_back(time_ms([&] { (void)apt::forward(batch, pipe.vit_params()); }));
      }
      rep.images[i].score_time_ms = median(score_t);
      rep.images[i].embed_time_ms = median(embed_t);
      rep.images[i].forward_time_ms = median(fwd_t);
    }
  }

  std::vector<double> reductions;
  double apt_sum = 0.0, fwd_ms = 0.0, flops_apt = 0.0, flops_base = 0.0;
  for (const auto& s : rep.images) {
    reductions.push_back(s.reduction_ratio);
    apt_sum += static_cast<double>(s.apt_tokens);
    fwd_ms += s.forward_time_ms;
    flops_apt += estimate_flops(s.apt_tokens, cfg.vit());
    flops_base += estimate_flops(s.base_tokens, cfg.vit());
  }
  const double n = static_cast<double>(rep.images.size());
  rep.mean_reduction = std::accumulate(reductions.begin(), reductions.end(), 0.0) / n;
  rep.median_reduction = median(reductions);
  rep.mean_apt_tokens = apt_sum / n;
  rep.tokens_per_second = fwd_ms > 0.0 ? apt_sum / (fwd_ms / 1000.0) : 0.0;
  rep.flop_ratio = flops_base > 0.0 ? flops_apt / flops_base : 1.0;
  return rep;
}

}  // namespace detail

/// Token reduction, estimated encoder cost and local timings over every
/// .png/.ppm file in `dir`. Decode failures are recorded in the report.
inline BenchReport run_bench(const std::filesystem::path& dir, const RunConfig& cfg, const BenchOptions& opts = {}) {
  validate(cfg);
  std::vector<BenchFailure> failures;
  const auto corpus = detail::load_corpus(dir, cfg, failures, opts.threads ? opts.threads : worker_count());
  return detail::bench_loaded(corpus, std::move(failures), cfg, opts);
}

/// One report per threshold setting. Settings must be componentwise
/// nondecreasing; per-image token counts are then checked to be
/// nonincreasing along the grid.
inline std::vector<BenchReport> sweep_thresholds(const std::filesystem::path& dir, const RunConfig& cfg,
                                                 const std::vector<std::vector<double>>& grid,
                                                 const BenchOptions& opts = {}) {
  require(!grid.empty(), Errc::InvalidConfig, "sweep: threshold grid is empty");
  for (std::size_t g = 1; g < grid.size(); ++g) {
    require(grid[g].size() == grid[g - 1].size(), Errc::InvalidConfig, "sweep: grid entries differ in length");
    for (std::size_t k = 0; k < grid[g].size(); ++k) {
      require(grid[g][k] >= grid[g - 1][k], Errc::InvalidConfig, "sweep: grid must be nondecreasing");
    }
  }
  std::vector<BenchFailure> failures;
  validate(cfg);
  const auto corpus = detail::load_corpus(dir, cfg, failures, opts.threads ? opts.threads : worker_count());
  std::vector<BenchReport> reports;
  for (const auto& tau : grid) {
    RunConfig c = cfg;
    c.thresholds = tau;
    validate(c);
    reports.push_back(detail::bench_loaded(corpus, failures, c, opts));
    if (reports.size() < 2) continue;
    const auto& prev = reports[reports.size() - 2].images;
    const auto& cur = reports.back().images;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      require(cur[i].apt_tokens <= prev[i].apt_tokens, Errc::InvariantViolation,
              "sweep: token count increased with threshold for " + cur[i].path);
    }
  }
  return reports;
}

struct ScorerMatch {
  ScorerKind scorer = ScorerKind::Entropy;
  double factor = 0.0;
  std::vector<double> thresholds;
  double retained_fraction = 1.0;
  double reduction = 0.0;
};

/// Total adaptive tokens over total base tokens.
inline double retained_fraction(const std::vector<PreparedImage>& images, const PatchPolicyConfig& policy,
                                unsigned threads = worker_count()) {
  std::vector<std::size_t> apt(images.size()), base(images.size());
  parallel_for(
      images.size(),
      [&](std::size_t i) {
        const auto a = assign_patches(images[i].image, policy);
        apt[i] = token_count(a);
        base[i] = a.base_tokens();
      },
      threads);
  const double num = static_cast<double>(std::accumulate(apt.begin(), apt.end(), std::size_t{0}));
  const double den = static_cast<double>(std::accumulate(base.begin(), base.end(), std::size_t{0}));
  return den > 0 ? num / den : 1.0;
}

/// For each scorer, bisects (20 steps) a global factor applied to the
/// configured threshold profile until the retained-token fraction reaches
/// `target`, so scorers can be compared at equal token budgets.
inline std::vector<ScorerMatch> compare_scorers(const std::vector<PreparedImage>& images, const RunConfig& cfg,
                                                double target, unsigned threads = worker_count()) {
  validate(cfg);
  require(target > 0.0 && target <= 1.0, Errc::InvalidConfig, "scorer comparison target must be in (0, 1]");
  std::vector<double> shape = cfg.thresholds;
  const double peak = shape.empty() ? 1.0 : *std::max_element(shape.begin(), shape.end());
  const bool usable = !shape.empty() && *std::min_element(shape.begin(), shape.end()) > 0.0;
  for (auto& t : shape) t = usable ? t / peak : 1.0;
  const double min_shape = shape.empty() ? 1.0 : *std::min_element(shape.begin(), shape.end());

  std::vector<ScorerMatch> out;
  for (ScorerKind kind : {ScorerKind::Entropy, ScorerKind::Laplacian, ScorerKind::Upsampling}) {
    PatchPolicyConfig policy = cfg.policy();
    policy.scorer.kind = kind;
    auto at = [&](double f) {
      for (std::size_t k = 0; k < shape.size(); ++k) policy.thresholds[k] = f * shape[k];
      return retained_fraction(images, policy, threads);
    };
    double lo = 0.0;
    double hi = (scorer_upper_bound(policy.scorer) + 1.0) / min_shape;
    double frac_hi = at(hi);
    for (int it = 0; it < 20; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double f = at(mid);
      if (f <= target) {
        hi = mid;
        frac_hi = f;
      } else {
        lo = mid;
      }
    }
    ScorerMatch m;
    m.scorer = kind;
    m.factor = hi;
    for (std::size_t k = 0; k < shape.size(); ++k) m.thresholds.push_back(hi * shape[k]);
    m.retained_fraction = frac_hi;
    m.reduction = 1.0 - frac_hi;
    out.push_back(std::move(m));
  }
  return out;
}

inline nlohmann::ordered_json to_json(const std::vector<ScorerMatch>& rows, double target) {
  nlohmann::ordered_json j;
  j["target_retained_fraction"] = target;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& m : rows) {
    nlohmann::ordered_json e;
    e["scorer"] = scorer_name(m.scorer);
    e["factor"] = m.factor;
    e["thresholds"] = m.thresholds;
    e["retained_fraction"] = m.retained_fraction;
    e["reduction"] = m.reduction;
    arr.push_back(std::move(e));
  }
  j["scorers"] = std::move(arr);
  return j;
}

}  // namespace apt
