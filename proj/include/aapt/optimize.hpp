// Copyright 2026 The aapt Authors
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
#include <vector>

namespace aapt {

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
};

// Nelder-Mead minimization with the standard coefficients (1, 2, 0.5, 0.5).
// Stops when the spread of function values across the simplex drops below
// `tol` or after `max_iter` iterations.
template <class F>
SimplexResult nelder_mead(F&& f, std::vector<double> x0, double step, double tol,
                          std::size_t max_iter = 5000) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> pts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step;
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i <= n; ++i) vals[i] = f(pts[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  std::size_t it = 0;
  auto blend = [&](const std::vector<double>& a, const std::vector<double>& b, double t,
                   std::vector<double>& out) {
    for (std::size_t k = 0; k < n; ++k) out[k] = a[k] + t * (b[k] - a[k]);
  };

  for (; it < max_iter; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
    if (vals[worst] - vals[best] <= tol) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i)
      if (i != worst)
        for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k] / static_cast<double>(n);

    blend(centroid, pts[worst], -1.0, trial);  // reflection
    const double fr = f(trial);
    if (fr < vals[best]) {
      blend(centroid, pts[worst], -2.0, trial2);  // expansion
      const double fe = f(trial2);
      if (fe < fr) {
        pts[worst] = trial2;
        vals[worst] = fe;
      } else {
        pts[worst] = trial;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = trial;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    blend(centroid, outside ? trial : pts[worst], 0.5, trial2);  // contraction
    const double fc = f(trial2);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = trial2;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {  // shrink toward best
      if (i == best) continue;
      blend(pts[best], pts[i], 0.5, pts[i]);
      vals[i] = f(pts[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  return {pts[best], vals[best], it};
}

}  // namespace aapt
