// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The lissel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LISSEL_NUMERIC_HPP
#define LISSEL_NUMERIC_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "error.hpp"

namespace lissel::numeric {

/// n points log-spaced over [lo, hi], endpoints exact.
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi >= lo) || n < 2) {
    throw PreconditionError("log_grid: need 0 < lo <= hi and n >= 2");
  }
  std::vector<double> out(n);
  const double a = std::log(lo);
  const double step = (std::log(hi) - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(a + step * static_cast<double>(i));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

struct Minimum {
  double x;
  double value;
};

/// Golden-section minimization of f on [a, b]; stops once b - a <= tol.
template <typename F>
Minimum golden_minimize(F&& f, double a, double b, double tol, int max_iter = 500) {
  constexpr double inv_phi = 0.6180339887498948482;
  if (a > b) std::swap(a, b);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < max_iter; ++it) {
    if (b - a <= tol) break;
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? Minimum{c, fc} : Minimum{d, fd};
}

struct BracketedMinimum {
  Minimum min;
  std::size_t grid_index;  // index of the best grid point
};

/// Scans f over ascending `grid`, then refines by golden section between the
/// neighbours of the best point. The scan guards against local minima that a
/// bare golden search on the whole interval would settle into.
template <typename F>
BracketedMinimum scan_minimize(F&& f, const std::vector<double>& grid, double tol) {
  if (grid.size() < 3) throw PreconditionError("scan_minimize: need at least 3 grid points");
  std::size_t best = 0;
  double best_val = f(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double v = f(grid[i]);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const std::size_t lo = best == 0 ? 0 : best - 1;
  const std::size_t hi = std::min(best + 1, grid.size() - 1);
  Minimum m = golden_minimize(f, grid[lo], grid[hi], tol);
  if (best_val < m.value) m = {grid[best], best_val};
  return {m, best};
}

/// Bisection for a sign change of f on [lo, hi]; f(lo) and f(hi) must differ in sign.
template <typename F>
double bisect(F&& f, double lo, double hi, double rel_tol, int max_iter = 400) {
  double flo = f(lo);
  const double fhi = f(hi);
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw PreconditionError("bisect: interval does not bracket a sign change");
  }
  for (int it = 0; it < max_iter && (hi - lo) > rel_tol * std::abs(hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace lissel::numeric

#endif  // LISSEL_NUMERIC_HPP
