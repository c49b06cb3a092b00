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
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "apt/rng.hpp"

namespace apt {

struct GradCheckResult {
  double rel_error = 0.0;       // ||analytic - numeric|| / max(||analytic||, ||numeric||, floor)
  std::size_t checked = 0;
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
};

/// Central finite differences on up to `max_samples` entries of `param`
/// (all of them when the tensor is small enough), compared against the
/// matching entries of `analytic`. `loss` re-evaluates the scalar objective
/// with `param` perturbed in place.
///
/// The norm floor sits above finite-difference roundoff (eps * |loss| / step,
/// around 1e-10 here) so tensors whose true gradient is zero, like the key
/// bias under softmax, don't report noise as a relative error of O(1).
template <typename Loss>
GradCheckResult check_gradient(std::span<double> param, std::span<const double> analytic, Loss&& loss,
                               double step = 1e-4, std::size_t max_samples = 64, std::uint64_t seed = 1,
                               double norm_floor = 1e-6) {
  std::vector<std::size_t> idx(param.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (idx.size() > max_samples) {
    Rng rng(seed);
    for (std::size_t i = 0; i < max_samples; ++i) {
      std::swap(idx[i], idx[i + static_cast<std::size_t>(rng.below(idx.size() - i))]);
    }
    idx.resize(max_samples);
  }
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  for (std::size_t i : idx) {
    const double saved = param[i];
    param[i] = saved + step;
    const double up = loss();
    param[i] = saved - step;
    const double down = loss();
    param[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    diff2 += (analytic[i] - numeric) * (analytic[i] - numeric);
    a2 += analytic[i] * analytic[i];
    n2 += numeric * numeric;
  }
  GradCheckResult r;
  r.checked = idx.size();
  r.analytic_norm = std::sqrt(a2);
  r.numeric_norm = std::sqrt(n2);
  const double scale = std::max({r.analytic_norm, r.numeric_norm, norm_floor});
  r.rel_error = std::sqrt(diff2) / scale;
  return r;
}

}  // namespace apt
