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

#ifndef LISSEL_SELECTION_HPP
#define LISSEL_SELECTION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "error.hpp"
#include "exp_model.hpp"
#include "metrics.hpp"
#include "numeric.hpp"
#include "poly_frontend.hpp"
#include "rng.hpp"

namespace lissel {

/// Choose at most n_max panels maximizing the post-MRC panel objective.
struct SelectionProblem {
  PanelMetrics metrics;
  std::size_t antennas;  // M
  double p_tx;
  double sigma2;
  std::size_t n_max;
  Normalization normalization = Normalization::selected;

  std::size_t n_panels() const noexcept { return metrics.size(); }

  void validate() const {
    if (metrics.size() == 0) throw PreconditionError("SelectionProblem: no panels");
    if (n_max < 1 || n_max > metrics.size()) {
      throw PreconditionError("SelectionProblem: need 1 <= n_max <= n_panels");
    }
    if (antennas == 0 || !(p_tx > 0.0) || !(sigma2 > 0.0)) {
      throw PreconditionError("SelectionProblem: antennas, p_tx and sigma2 must be positive");
    }
  }

  double objective(std::span<const std::size_t> chosen) const {
    return sndr_subset(chosen, metrics, antennas, p_tx, sigma2, normalization);
  }
};

struct SelectionResult {
  std::vector<std::size_t> chosen;  // ascending panel indices
  double sndr = 0.0;
  double se = 0.0;
  std::string solver;
  std::size_t objective_evals = 0;
  std::optional<double> rho_target;  // power-proximity solvers only
  bool target_at_boundary = false;
};

namespace detail {
inline SelectionResult make_result(const SelectionProblem& prob, std::vector<std::size_t> chosen,
                                   std::string name, std::size_t evals) {
  std::sort(chosen.begin(), chosen.end());
  SelectionResult r;
  r.sndr = prob.objective(chosen);
  r.se = se_lower_bound(r.sndr);
  r.chosen = std::move(chosen);
  r.solver = std::move(name);
  r.objective_evals = evals;
  return r;
}

/// Strictly better: higher SNDR, or equal SNDR and lexicographically smaller set.
inline bool better(double a, const std::vector<std::size_t>& sa, double b, const std::vector<std::size_t>& sb) {
  if (a != b) return a > b;
  return std::lexicographical_compare(sa.begin(), sa.end(), sb.begin(), sb.end());
}

/// stable ordering of indices by key ascending; ties keep the smaller index first.
template <typename Key>
std::vector<std::size_t> rank_by(std::size_t n, Key&& key) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  return idx;
}
}  // namespace detail

/// sum_{k=1..k_max} C(n, k), saturating at SIZE_MAX.
inline std::size_t count_subsets(std::size_t n, std::size_t k_max) {
  constexpr auto cap = std::numeric_limits<std::size_t>::max();
  std::size_t total = 0;
  long double binom = 1.0L;
  for (std::size_t k = 1; k <= std::min(n, k_max); ++k) {
    binom = binom * static_cast<long double>(n - k + 1) / static_cast<long double>(k);
    const long double next = static_cast<long double>(total) + std::round(binom);
    if (next >= static_cast<long double>(cap)) return cap;
    total = static_cast<std::size_t>(next);
  }
  return total;
}

struct ExhaustiveBudget {
  std::size_t max_panels = 24;
  std::size_t max_evaluations = 2'000'000;
  unsigned threads = 1;
};

inline bool exhaustive_feasible(const SelectionProblem& prob, const ExhaustiveBudget& budget = {}) {
  return prob.n_panels() <= budget.max_panels &&
         count_subsets(prob.n_panels(), prob.n_max) <= budget.max_evaluations;
}

/// Enumerates every subset of size 1..n_max. Workers split the subsets by their
/// first index and are merged with the (SNDR, lexicographic) order, so the
/// result does not depend on the thread count.
inline SelectionResult solve_exhaustive(const SelectionProblem& prob, const ExhaustiveBudget& budget = {}) {
  prob.validate();
  const std::size_t n = prob.n_panels();
  const std::size_t evals = count_subsets(n, prob.n_max);
  if (!exhaustive_feasible(prob, budget)) {
    throw BudgetError("solve_exhaustive: " + std::to_string(evals) + " subsets of " + std::to_string(n) +
                      " panels exceed the budget; use the local-search heuristic");
  }

  struct Best {
    double sndr = -1.0;
    std::vector<std::size_t> set;
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(budget.threads, static_cast<unsigned>(n)));
  std::vector<Best> partial(workers);

  auto run = [&](unsigned w) {
    Best& best = partial[w];
    std::vector<std::size_t> comb;
    for (std::size_t k = 1; k <= prob.n_max; ++k) {
      for (std::size_t first = w; first + k <= n; first += workers) {
        comb.resize(k);
        std::iota(comb.begin(), comb.end(), first);
        while (true) {
          const double v = prob.objective(comb);
          if (best.set.empty() || detail::better(v, comb, best.sndr, best.set)) {
            best.sndr = v;
            best.set = comb;
          }
          // advance positions 1..k-1, keeping comb[0] == first
          std::size_t i = k;
          while (i > 1 && comb[i - 1] == n - k + i - 1) --i;
          if (i <= 1) break;
          ++comb[i - 1];
          for (std::size_t j = i; j < k; ++j) comb[j] = comb[j - 1] + 1;
        }
      }
    }
  };

  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }

  Best best;
  for (auto& p : partial) {
    if (p.set.empty()) continue;
    if (best.set.empty() || detail::better(p.sndr, p.set, best.sndr, best.set)) best = std::move(p);
  }
  return detail::make_result(prob, std::move(best.set), "exhaustive", evals);
}

struct LocalSearchOptions {
  std::uint64_t seed = 0;
  std::size_t max_iters = 1000;
  std::size_t restarts = 4;
};

/// Greedy construction, then best-improvement hill climbing over swap, add and
/// drop moves, then `restarts` climbs from seeded random subsets.
inline SelectionResult solve_local_search(const SelectionProblem& prob, const LocalSearchOptions& opt = {}) {
  prob.validate();
  const std::size_t n = prob.n_panels();
  std::size_t evals = 0;
  auto eval = [&](std::vector<std::size_t> s) {
    std::sort(s.begin(), s.end());
    ++evals;
    return prob.objective(s);
  };

  auto climb = [&](std::vector<std::size_t> s) {
    std::sort(s.begin(), s.end());
    double cur = eval(s);
    for (std::size_t it = 0; it < opt.max_iters; ++it) {
      std::vector<bool> in(n, false);
      for (auto i : s) in[i] = true;
      double best_v = cur;
      std::vector<std::size_t> best_s;
      auto consider = [&](std::vector<std::size_t> cand) {
        std::sort(cand.begin(), cand.end());
        const double v = eval(cand);
        if (v > best_v) {
          best_v = v;
          best_s = std::move(cand);
        }
      };
      for (std::size_t a = 0; a < s.size(); ++a) {
        for (std::size_t j = 0; j < n; ++j) {
          if (in[j]) continue;
          auto cand = s;
          cand[a] = j;
          consider(std::move(cand));
        }
      }
      if (s.size() < prob.n_max) {
        for (std::size_t j = 0; j < n; ++j) {
          if (in[j]) continue;
          auto cand = s;
          cand.push_back(j);
          consider(std::move(cand));
        }
      }
      if (s.size() > 1) {
        for (std::size_t a = 0; a < s.size(); ++a) {
          auto cand = s;
          cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(a));
          consider(std::move(cand));
        }
      }
      if (best_s.empty()) break;
      s = std::move(best_s);
      cur = best_v;
    }
    return std::pair{cur, s};
  };

  // greedy
  std::vector<std::size_t> s;
  double cur = 0.0;
  std::vector<bool> in(n, false);
  while (s.size() < prob.n_max) {
    double best_v = -1.0;
    std::size_t best_j = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (in[j]) continue;
      auto cand = s;
      cand.push_back(j);
      const double v = eval(cand);
      if (v > best_v) {
        best_v = v;
        best_j = j;
      }
    }
    if (s.empty() || best_v > cur) {
      s.push_back(best_j);
      in[best_j] = true;
      cur = best_v;
    } else {
      break;
    }
  }
  auto [best_v, best_s] = climb(s);

  for (std::size_t r = 0; r < opt.restarts; ++r) {
    std::mt19937_64 gen(stream_seed(opt.seed, r));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[gen() % (i + 1)]);
    const std::size_t k = 1 + static_cast<std::size_t>(gen() % prob.n_max);
    auto [v, cand] = climb({perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k)});
    if (detail::better(v, cand, best_v, best_s)) {
      best_v = v;
      best_s = std::move(cand);
    }
  }
  return detail::make_result(prob, std::move(best_s), "local", evals);
}

/// Baseline: the n_max panels with the largest effective channel gain.
inline SelectionResult solve_gain_topk(const SelectionProblem& prob) {
  prob.validate();
  const auto& h = prob.metrics.effective_gain;
  auto order = detail::rank_by(prob.n_panels(), [&](std::size_t i) { return -h[i]; });
  order.resize(prob.n_max);
  return detail::make_result(prob, std::move(order), "gain", 0);
}

/// The n_max panels whose input power is closest to rho_target in log scale.
inline SelectionResult solve_power_proximity(const SelectionProblem& prob, double rho_target) {
  prob.validate();
  if (!(rho_target > 0.0) || !std::isfinite(rho_target)) {
    throw DomainError("solve_power_proximity: rho_target must be positive");
  }
  const double lt = std::log(rho_target);
  const auto& rho = prob.metrics.rho;
  auto order = detail::rank_by(prob.n_panels(), [&](std::size_t i) { return std::abs(std::log(rho[i]) - lt); });
  order.resize(prob.n_max);
  auto r = detail::make_result(prob, std::move(order), "proximity", 0);
  r.rho_target = rho_target;
  return r;
}

enum class ClosedFormRule { opt1, opt2 };

/// Power-proximity selection around the closed-form optimum of the
/// exponential surrogate. The reported SNDR is always the full polynomial
/// metric. If rho_max is given and the closed form lands above it, the target
/// is clamped and flagged.
inline SelectionResult solve_closed_form(const SelectionProblem& prob, const ExpDistortion& fitted,
                                         ClosedFormRule rule = ClosedFormRule::opt2,
                                         std::optional<double> rho_max = std::nullopt) {
  double target = rule == ClosedFormRule::opt2 ? rho_opt2(fitted, prob.sigma2) : rho_opt1(fitted, prob.sigma2);
  bool boundary = false;
  if (rho_max && target >= *rho_max) {
    target = *rho_max;
    boundary = true;
  }
  auto r = solve_power_proximity(prob, target);
  r.solver = rule == ClosedFormRule::opt2 ? "closedform2" : "closedform1";
  r.target_at_boundary = boundary;
  return r;
}

/// Per-antenna (SISO) objective with the full polynomial model:
///   |g(rho)|^2 rho / (C(rho) + sigma2).
inline double siso_poly_objective(const OddPolynomial& model, double sigma2, double rho) {
  const BussgangPoint b = bussgang(model, rho);
  return std::norm(b.gain) * rho / (b.distortion_power + sigma2);
}

/// Maximizer of the SISO polynomial objective on (0, rho_max]: dense log-grid
/// scan (the objective need not be unimodal) then golden section in ln rho.
inline RhoOptimum solve_siso_poly(const OddPolynomial& model, double sigma2, double rho_max,
                                  std::size_t grid_points = 2000, double decades = 8.0) {
  if (!(sigma2 > 0.0) || !(rho_max > 0.0)) throw PreconditionError("solve_siso_poly: sigma2, rho_max must be > 0");
  const auto rho_grid = numeric::log_grid(rho_max * std::pow(10.0, -decades), rho_max, grid_points);
  std::vector<double> log_grid(rho_grid.size());
  std::transform(rho_grid.begin(), rho_grid.end(), log_grid.begin(), [](double r) { return std::log(r); });
  auto neg = [&](double lr) { return -siso_poly_objective(model, sigma2, std::min(std::exp(lr), rho_max)); };
  const auto m = numeric::scan_minimize(neg, log_grid, 1e-10);
  if (m.grid_index + 1 == log_grid.size()) return {rho_max, true};
  return {std::min(std::exp(m.min.x), rho_max), false};
}

}  // namespace lissel

#endif  // LISSEL_SELECTION_HPP
