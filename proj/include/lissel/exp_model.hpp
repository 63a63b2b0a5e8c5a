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

#ifndef LISSEL_EXP_MODEL_HPP
#define LISSEL_EXP_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "format.hpp"
#include "numeric.hpp"

namespace lissel {

/// Exponential distortion-power surrogate C(rho) = rho (1 - exp(-beta rho^q)).
struct ExpDistortion {
  double beta;
  double q;

  ExpDistortion(double beta_, double q_) : beta(beta_), q(q_) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw PreconditionError("ExpDistortion: beta must be > 0");
    if (!(q > 2.0) || !std::isfinite(q)) throw PreconditionError("ExpDistortion: q must be > 2");
  }
};

namespace detail {
/// ln(1 - exp(-u)) given ln u, without underflow for tiny u.
inline double log_one_minus_exp_neg(double log_u) {
  if (log_u < -30.0) return log_u - 0.5 * std::exp(log_u);
  return std::log(-std::expm1(-std::exp(log_u)));
}

inline double eval_exp_raw(double beta, double q, double rho) {
  if (rho == 0.0) return 0.0;
  return rho * -std::expm1(-beta * std::pow(rho, q));
}
}  // namespace detail

inline double eval_exp(const ExpDistortion& model, double rho) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw DomainError("eval_exp: rho must be finite and >= 0");
  return detail::eval_exp_raw(model.beta, model.q, rho);
}

// ---------------------------------------------------------------------------
// Simplified SISO problem:  max rho / (C(rho) + sigma2)  on (0, rho_max].

struct SisoProblem {
  ExpDistortion model;
  double sigma2;
  double rho_max;

  SisoProblem(ExpDistortion model_, double sigma2_, double rho_max_)
      : model(model_), sigma2(sigma2_), rho_max(rho_max_) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw PreconditionError("SisoProblem: sigma2 must be > 0");
    if (!(rho_max > 0.0) || !std::isfinite(rho_max)) {
      throw PreconditionError("SisoProblem: rho_max must be positive and finite");
    }
  }
};

/// A maximizer over (0, rho_max]; at_boundary marks rho == rho_max with the
/// objective still increasing there.
struct RhoOptimum {
  double rho;
  bool at_boundary;
};

inline double siso_objective(const SisoProblem& prob, double rho) {
  return rho / (eval_exp(prob.model, rho) + prob.sigma2);
}

/// Sign of the objective's derivative in log form:
///   ln sigma2 - [ln(q beta) + (q+1) ln rho - beta rho^q].
/// Positive where the objective increases.
inline double stationarity_residual(const SisoProblem& prob, double rho) {
  const auto& m = prob.model;
  return std::log(prob.sigma2) -
         (std::log(m.q * m.beta) + (m.q + 1.0) * std::log(rho) - m.beta * std::pow(rho, m.q));
}

/// Exact maximizer: first downward sign change of the stationarity condition
///   sigma2 - q beta rho^{q+1} exp(-beta rho^q) = 0
/// found on a log grid and refined by bisection to 1e-10 relative.
inline RhoOptimum optimum_rho_numeric(const SisoProblem& prob, std::size_t grid_points = 4000,
                                      double decades = 14.0) {
  auto resid = [&](double rho) { return stationarity_residual(prob, rho); };
  const auto grid = numeric::log_grid(prob.rho_max * std::pow(10.0, -decades), prob.rho_max, grid_points);
  if (resid(grid.front()) <= 0.0) {
    throw NumericalError("optimum_rho_numeric: objective already decreasing at the grid floor");
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (resid(grid[i]) <= 0.0) {
      return {numeric::bisect(resid, grid[i - 1], grid[i], 1e-10), false};
    }
  }
  return {prob.rho_max, true};
}

/// First closed-form approximation (second-order Taylor step).
inline double rho_opt1(const ExpDistortion& model, double sigma2) {
  if (!(sigma2 > 0.0)) throw DomainError("rho_opt1: sigma2 must be > 0");
  const double disc = 1.0 - 4.0 * sigma2 / model.q;
  if (disc < 0.0) {
    throw DomainError("rho_opt1: 4 sigma2 / q = " + format_double(4.0 * sigma2 / model.q) +
                      " > 1; use the numeric optimum");
  }
  return std::pow((1.0 - std::sqrt(disc)) / (2.0 * model.beta), 1.0 / (model.q + 1.0));
}

/// Second closed-form approximation (log form, beta rho^q neglected).
inline double rho_opt2(const ExpDistortion& model, double sigma2) {
  if (!(sigma2 > 0.0)) throw DomainError("rho_opt2: sigma2 must be > 0");
  return std::exp((std::log(sigma2) - std::log(model.q * model.beta)) / (model.q + 1.0));
}

/// Number of sign changes of the forward difference of the objective on a
/// log grid over [rho_max * 10^-decades, rho_max]. Zero-valued differences are skipped.
inline std::size_t slope_sign_changes(const SisoProblem& prob, std::size_t grid_points = 10'000,
                                      double decades = 6.0) {
  const auto grid = numeric::log_grid(prob.rho_max * std::pow(10.0, -decades), prob.rho_max, grid_points);
  std::size_t changes = 0;
  int last = 0;
  double prev = siso_objective(prob, grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double cur = siso_objective(prob, grid[i]);
    const double d = cur - prev;
    prev = cur;
    const int s = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    if (s == 0) continue;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

// ---------------------------------------------------------------------------
// Curve fitting

struct DistortionSample {
  double rho;
  double c;
};

enum class FitWeighting { absolute, log };

struct FitOptions {
  double q_lo = 2.0;  // exclusive
  double q_hi = 12.0;
  FitWeighting weighting = FitWeighting::absolute;
  std::size_t q_scan_points = 100;
  std::size_t beta_scan_points = 161;
  double beta_rel_tol = 1e-6;
  double q_tol = 1e-9;
};

struct ExpFit {
  ExpDistortion model;
  double objective;
  double rmse;  // absolute, sqrt(mean (C_exp - C)^2)
  bool q_at_lower_bound = false;
  double free_q = std::numeric_limits<double>::quiet_NaN();     // only set when q_at_lower_bound
  double free_rmse = std::numeric_limits<double>::quiet_NaN();  // ditto
  std::vector<std::string> warnings;
};

namespace detail {
struct ProfilePoint {
  double log_beta;
  double objective;
};

class ExpFitter {
 public:
  ExpFitter(std::span<const DistortionSample> samples, const FitOptions& opt)
      : samples_(samples), opt_(opt) {
    for (const auto& s : samples_) {
      log_rho_.push_back(std::log(s.rho));
      log_c_.push_back(s.c > 0.0 ? std::log(s.c) : 0.0);
    }
    log_rho_lo_ = *std::min_element(log_rho_.begin(), log_rho_.end());
    log_rho_hi_ = *std::max_element(log_rho_.begin(), log_rho_.end());
  }

  double objective(double q, double log_beta) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const double log_u = log_beta + q * log_rho_[i];
      if (opt_.weighting == FitWeighting::absolute) {
        const double model = samples_[i].rho * -std::expm1(-std::exp(log_u));
        const double r = model - samples_[i].c;
        acc += r * r;
      } else {
        if (samples_[i].c <= 0.0) continue;
        const double r = log_rho_[i] + log_one_minus_exp_neg(log_u) - log_c_[i];
        acc += r * r;
      }
    }
    return acc;
  }

  /// Best ln(beta) for fixed q. beta rho^q is swept from e^-60 at the top of
  /// the data to e^8 at the bottom, which brackets every useful fit.
  ProfilePoint profile(double q) const {
    const double lo = -60.0 - q * log_rho_hi_;
    const double hi = 8.0 - q * log_rho_lo_;
    const auto obj = [&](double lb) { return objective(q, lb); };
    std::vector<double> grid(opt_.beta_scan_points);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid.size() - 1);
    }
    const auto m = numeric::scan_minimize(obj, grid, opt_.beta_rel_tol * 1e-1);
    return {m.min.x, m.min.value};
  }

  struct Best {
    double q;
    ProfilePoint p;
  };

  Best search_q(double q_lo, double q_hi) const {
    const std::size_t n = opt_.q_scan_points;
    std::vector<double> grid(n);
    // q_lo is exclusive: first grid point half a step inside.
    const double step = (q_hi - q_lo) / (static_cast<double>(n) - 0.5);
    for (std::size_t i = 0; i < n; ++i) grid[i] = q_lo + step * (0.5 + static_cast<double>(i));
    grid.back() = q_hi;
    const auto obj = [&](double q) { return profile(q).objective; };
    auto m = numeric::scan_minimize(obj, grid, opt_.q_tol);
    if (m.grid_index == 0) {
      // The golden step only ever evaluates interior points, so q stays > q_lo.
      const auto edge = numeric::golden_minimize(obj, q_lo, grid[1], opt_.q_tol);
      if (edge.value <= m.min.value) m.min = edge;
    }
    return {m.min.x, profile(m.min.x)};
  }

  double rmse(double beta, double q) const {
    double acc = 0.0;
    for (const auto& s : samples_) {
      const double r = eval_exp_raw(beta, q, s.rho) - s.c;
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(samples_.size()));
  }

 private:
  std::span<const DistortionSample> samples_;
  FitOptions opt_;
  std::vector<double> log_rho_;
  std::vector<double> log_c_;
  double log_rho_lo_ = 0.0;
  double log_rho_hi_ = 0.0;
};
}  // namespace detail

/// Least-squares fit of (beta, q): outer golden-section search over q inside
/// (max(q_lo, 2), q_hi], inner bracketed search over ln(beta).
inline ExpFit fit_exp(std::span<const DistortionSample> samples, const FitOptions& opt = {}) {
  if (samples.size() < 8) {
    throw PreconditionError("fit_exp: need at least 8 samples, got " + std::to_string(samples.size()));
  }
  double rho_min = std::numeric_limits<double>::infinity();
  double rho_max = 0.0;
  double c_max = 0.0;
  for (const auto& s : samples) {
    if (!(s.rho > 0.0) || !std::isfinite(s.rho)) throw PreconditionError("fit_exp: rho must be positive");
    if (!(s.c >= 0.0) || !std::isfinite(s.c)) throw PreconditionError("fit_exp: C must be >= 0");
    rho_min = std::min(rho_min, s.rho);
    rho_max = std::max(rho_max, s.rho);
    c_max = std::max(c_max, s.c);
  }
  if (rho_max < 10.0 * rho_min) throw PreconditionError("fit_exp: samples must span at least one decade");
  if (c_max == 0.0) throw PreconditionError("fit_exp: all distortion samples are zero");
  const double q_lo = std::max(opt.q_lo, 2.0);
  if (!(opt.q_hi > q_lo)) throw PreconditionError("fit_exp: empty feasible q interval");

  ExpFit out{ExpDistortion(1.0, 3.0), 0.0, 0.0, false, std::numeric_limits<double>::quiet_NaN(),
             std::numeric_limits<double>::quiet_NaN(), {}};

  std::vector<DistortionSample> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.rho < b.rho; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].c < sorted[i - 1].c - 1e-6 * c_max) {
      out.warnings.push_back("distortion samples decrease with rho near rho = " + format_double(sorted[i].rho) +
                             "; fit quality may be poor");
      break;
    }
  }

  const detail::ExpFitter fitter(samples, opt);
  const auto best = fitter.search_q(q_lo, opt.q_hi);
  out.model = ExpDistortion(std::exp(best.p.log_beta), best.q);
  out.objective = best.p.objective;
  out.rmse = fitter.rmse(out.model.beta, out.model.q);

  // Lower bound active: report what an unconstrained exponent would give.
  if (best.q - q_lo < 1e-6 * q_lo) {
    out.q_at_lower_bound = true;
    const auto free = fitter.search_q(0.05, opt.q_hi);
    out.free_q = free.q;
    out.free_rmse = fitter.rmse(std::exp(free.p.log_beta), free.q);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text formats

inline void write_exp_record(std::ostream& os, const ExpDistortion& model, double rmse) {
  os << "beta " << format_double(model.beta) << " q " << format_double(model.q) << " rmse "
     << format_double(rmse) << '\n';
}

struct ExpRecord {
  ExpDistortion model;
  double rmse;
};

inline ExpRecord read_exp_record(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string kb, kq, kr, rest;
    double b = 0.0, q = 0.0, r = 0.0;
    if (!(ss >> kb >> b >> kq >> q >> kr >> r) || kb != "beta" || kq != "q" || kr != "rmse" || (ss >> rest)) {
      throw ParseError("expected 'beta <value> q <value> rmse <value>'", lineno);
    }
    try {
      return {ExpDistortion(b, q), r};
    } catch (const PreconditionError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  throw ParseError("empty model record", lineno + 1);
}

/// Two-column CSV (rho, C) with a header row.
inline std::vector<DistortionSample> read_samples_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<DistortionSample> out;
  bool header = true;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw ParseError("expected two comma-separated columns", lineno);
    }
    try {
      std::size_t used = 0;
      const std::string a = line.substr(0, comma);
      const std::string b = line.substr(comma + 1);
      const double rho = std::stod(a, &used);
      if (a.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("rho");
      const double c = std::stod(b, &used);
      if (b.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("c");
      out.push_back({rho, c});
    } catch (const std::exception&) {
      throw ParseError("non-numeric value", lineno);
    }
  }
  if (header) throw ParseError("missing header row", lineno + 1);
  return out;
}

}  // namespace lissel

#endif  // LISSEL_EXP_MODEL_HPP
