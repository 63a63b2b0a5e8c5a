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

#ifndef LISSEL_POLY_FRONTEND_HPP
#define LISSEL_POLY_FRONTEND_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "format.hpp"
#include "numeric.hpp"

namespace lissel {

using cplx = std::complex<double>;

/// Memoryless odd-order polynomial  f(x) = sum_k a_{2k+1} x |x|^{2k},  k = 0..L-1.
class OddPolynomial {
 public:
  explicit OddPolynomial(std::vector<cplx> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw PreconditionError("OddPolynomial: need at least one term");
    if (coeffs_.front() == cplx{0.0, 0.0}) {
      throw PreconditionError("OddPolynomial: linear coefficient a1 must be nonzero");
    }
    for (const auto& a : coeffs_) {
      if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
        throw PreconditionError("OddPolynomial: non-finite coefficient");
      }
    }
    // (2L-1)! is the largest factorial the distortion sum touches.
    factorial_.resize(2 * coeffs_.size());
    factorial_[0] = 1.0L;
    for (std::size_t m = 1; m < factorial_.size(); ++m) {
      factorial_[m] = factorial_[m - 1] * static_cast<long double>(m);
    }
  }

  static OddPolynomial identity() { return OddPolynomial({cplx{1.0, 0.0}}); }

  /// Number of odd terms L; the highest order is 2L-1.
  std::size_t terms() const noexcept { return coeffs_.size(); }

  std::span<const cplx> coeffs() const noexcept { return coeffs_; }

  /// a_j for odd j in [1, 2L-1]; zero for even j or j out of range.
  cplx coeff(std::size_t j) const noexcept {
    if (j % 2 == 0 || j > 2 * coeffs_.size() - 1) return {0.0, 0.0};
    return coeffs_[(j - 1) / 2];
  }

  long double factorial(std::size_t m) const { return factorial_.at(m); }

  friend bool operator==(const OddPolynomial& a, const OddPolynomial& b) {
    return a.coeffs_ == b.coeffs_;
  }

 private:
  std::vector<cplx> coeffs_;
  std::vector<long double> factorial_;
};

/// Bussgang decomposition at input power rho: z = gain * x + eta, E|eta|^2 = distortion_power.
struct BussgangPoint {
  double rho;
  cplx gain;
  double distortion_power;
};

/// Reference transmit power and back-off (dB) applied to it.
struct OperatingPoint {
  double p_ref;
  double backoff_db;

  OperatingPoint(double p_ref_, double backoff_db_) : p_ref(p_ref_), backoff_db(backoff_db_) {
    if (!(p_ref > 0.0) || !std::isfinite(p_ref)) {
      throw PreconditionError("OperatingPoint: p_ref must be positive and finite");
    }
    if (!(backoff_db >= 0.0) || !std::isfinite(backoff_db)) {
      throw PreconditionError("OperatingPoint: backoff_db must be >= 0");
    }
  }
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double effective_power(const OperatingPoint& op) {
  return op.p_ref * std::pow(10.0, -op.backoff_db / 10.0);
}

/// Horner recurrence in |x|^2.
inline cplx eval_poly(const OddPolynomial& model, cplx x) {
  if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) {
    throw DomainError("eval_poly: non-finite input sample");
  }
  const auto a = model.coeffs();
  const double s = std::norm(x);
  cplx acc = a.back();
  for (std::size_t k = a.size() - 1; k-- > 0;) acc = acc * s + a[k];
  return acc * x;
}

namespace detail {
inline void check_rho(double rho, const char* who) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw DomainError(std::string(who) + ": rho must be positive and finite");
  }
}

inline std::complex<long double> widen(cplx a) { return {a.real(), a.imag()}; }

inline std::complex<long double> gain_ld(const OddPolynomial& model, double rho) {
  const auto a = model.coeffs();
  std::complex<long double> g{0.0L, 0.0L};
  long double rho_k = 1.0L;
  for (std::size_t k = 0; k < a.size(); ++k) {
    g += widen(a[k]) * (model.factorial(k + 1) * rho_k);
    rho_k *= rho;
  }
  return g;
}

/// E|f(x)|^2 for x ~ CN(0, rho).
inline long double output_power_ld(const OddPolynomial& model, double rho) {
  const std::size_t top = 2 * model.terms() - 1;
  long double total = 0.0L;
  long double rho_m = 1.0L;
  for (std::size_t m = 1; m <= top; ++m) {
    rho_m *= rho;
    std::complex<long double> inner{0.0L, 0.0L};
    for (std::size_t i = 1; i <= m; ++i) {
      inner += widen(model.coeff(2 * i - 1)) * std::conj(widen(model.coeff(2 * m - 2 * i + 1)));
    }
    total += model.factorial(m) * rho_m * inner.real();
  }
  return total;
}
}  // namespace detail

/// g = sum_k a_{2k+1} (k+1)! rho^k.
inline cplx bussgang_gain(const OddPolynomial& model, double rho) {
  detail::check_rho(rho, "bussgang_gain");
  const auto g = detail::gain_ld(model, rho);
  return {static_cast<double>(g.real()), static_cast<double>(g.imag())};
}

/// E|f(x)|^2 under x ~ CN(0, rho).
inline double output_power(const OddPolynomial& model, double rho) {
  detail::check_rho(rho, "output_power");
  return static_cast<double>(detail::output_power_ld(model, rho));
}

/// C = E|f(x)|^2 - |g|^2 rho. The two terms nearly cancel at small rho, so
/// results in [-eps, 0) with eps = 1e-12 * E|f(x)|^2 are clamped to zero and
/// anything below -eps is reported.
inline double distortion_power(const OddPolynomial& model, double rho) {
  detail::check_rho(rho, "distortion_power");
  const long double total = detail::output_power_ld(model, rho);
  const long double c = total - std::norm(detail::gain_ld(model, rho)) * rho;
  const long double eps = 1e-12L * std::abs(total);
  if (c < -eps) {
    throw NumericalError("distortion_power: negative result " +
                         format_double(static_cast<double>(c)) + " at rho " + format_double(rho) +
                         "; coefficients or rho outside the model's validity");
  }
  return c < 0.0L ? 0.0 : static_cast<double>(c);
}

inline BussgangPoint bussgang(const OddPolynomial& model, double rho) {
  return {rho, bussgang_gain(model, rho), distortion_power(model, rho)};
}

/// Model seen when input amplitudes are expressed in units `scale` times larger:
/// f'(x) = scale * f(x / scale), i.e. a_{2k+1} -> a_{2k+1} / scale^{2k}.
/// Consequently bussgang_gain(f', scale^2 rho) == bussgang_gain(f, rho).
inline OddPolynomial rescale_input(const OddPolynomial& model, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw PreconditionError("rescale_input: scale must be positive and finite");
  }
  std::vector<cplx> a(model.coeffs().begin(), model.coeffs().end());
  const double s2 = scale * scale;
  double div = 1.0;
  for (auto& c : a) {
    c /= div;
    div *= s2;
  }
  return OddPolynomial(std::move(a));
}

/// Input power at which the Gaussian-input Bussgang gain has compressed by
/// `compression_db` relative to the small-signal gain |a1|.
inline double gaussian_compression_point(const OddPolynomial& model, double rho_hi,
                                         double compression_db = 1.0) {
  const double target = std::norm(model.coeff(1)) * std::pow(10.0, -compression_db / 10.0);
  auto excess = [&](double rho) { return std::norm(bussgang_gain(model, rho)) - target; };
  const auto grid = numeric::log_grid(rho_hi * 1e-9, rho_hi, 4000);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (excess(grid[i]) <= 0.0) {
      return numeric::bisect(excess, grid[i - 1], grid[i], 1e-14);
    }
  }
  throw DomainError("gaussian_compression_point: gain never compresses by " +
                    format_double(compression_db) + " dB below rho " + format_double(rho_hi));
}

// ---------------------------------------------------------------------------
// Stand-in amplifier

/// Real AM/AM amplitude map r -> A(r).
using AmAmCurve = std::function<double(double)>;

/// Soft limiter A(r) = r / (1 + r^{2p})^{1/(2p)}, unit saturation.
inline AmAmCurve soft_limiter(double smoothness = 2.0) {
  return [p2 = 2.0 * smoothness](double r) { return r / std::pow(1.0 + std::pow(r, p2), 1.0 / p2); };
}

inline AmAmCurve identity_curve() {
  return [](double r) { return r; };
}

struct AmplitudeRange {
  double lo = 0.0;
  double hi = 1.2;
};

struct StandinFit {
  OddPolynomial model;
  double residual_rms;
  double condition;  // of the column-equilibrated normal matrix
};

/// Least-squares odd-polynomial fit of `reference` over `range`, by normal
/// equations on a uniform amplitude grid. Columns are equilibrated before the
/// condition check and the solve.
inline StandinFit fit_standin_amplifier(const AmAmCurve& reference, std::size_t terms = 6,
                                        AmplitudeRange range = {}, std::size_t grid_points = 256,
                                        double max_condition = 1e12) {
  if (terms == 0) throw PreconditionError("fit_standin_amplifier: need L >= 1");
  if (!(range.lo >= 0.0) || !(range.hi > range.lo)) {
    throw PreconditionError("fit_standin_amplifier: need 0 <= lo < hi");
  }
  if (grid_points < std::max<std::size_t>(256, 2 * terms)) {
    throw PreconditionError("fit_standin_amplifier: need at least 256 grid points");
  }
  const auto n = static_cast<Eigen::Index>(terms);
  Eigen::MatrixXd design(static_cast<Eigen::Index>(grid_points), n);
  Eigen::VectorXd target(static_cast<Eigen::Index>(grid_points));
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double r =
        range.lo + (range.hi - range.lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    const auto row = static_cast<Eigen::Index>(i);
    double pw = r;
    for (Eigen::Index k = 0; k < n; ++k) {
      design(row, k) = pw;
      pw *= r * r;
    }
    target(row) = reference(r);
  }
  const Eigen::MatrixXd gram = design.transpose() * design;
  const Eigen::VectorXd rhs = design.transpose() * target;
  const Eigen::VectorXd scale = gram.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd eq = scale.asDiagonal() * gram * scale.asDiagonal();

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(eq, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  const double cond = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  if (!(cond <= max_condition)) {
    throw NumericalError("fit_standin_amplifier: design matrix ill-conditioned (condition " +
                         format_double(cond) + "); use fewer terms or a narrower range");
  }
  const Eigen::VectorXd y = eq.ldlt().solve(scale.asDiagonal() * rhs);
  const Eigen::VectorXd coef = scale.asDiagonal() * y;

  std::vector<cplx> a(terms);
  for (Eigen::Index k = 0; k < n; ++k) a[static_cast<std::size_t>(k)] = {coef(k), 0.0};
  const double rms = std::sqrt((design * coef - target).squaredNorm() / static_cast<double>(grid_points));
  return {OddPolynomial(std::move(a)), rms, cond};
}

// ---------------------------------------------------------------------------
// Fixture text format:  "L <terms>" then one "k re im" line per term.

inline void write_polynomial(std::ostream& os, const OddPolynomial& model) {
  os << "L " << model.terms() << '\n';
  const auto a = model.coeffs();
  for (std::size_t k = 0; k < a.size(); ++k) {
    os << k << ' ' << format_double(a[k].real()) << ' ' << format_double(a[k].imag()) << '\n';
  }
}

inline OddPolynomial read_polynomial(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  std::size_t terms = 0;
  std::vector<cplx> a;
  std::vector<bool> seen;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') {
      continue;
    }
    std::istringstream ss(line);
    std::string rest;
    if (terms == 0) {
      std::string tag;
      long long value = 0;
      if (!(ss >> tag >> value) || tag != "L" || (ss >> rest)) {
        throw ParseError("expected header 'L <terms>'", lineno);
      }
      if (value < 1) throw ParseError("L must be >= 1", lineno);
      terms = static_cast<std::size_t>(value);
      a.assign(terms, cplx{0.0, 0.0});
      seen.assign(terms, false);
      continue;
    }
    long long k = -1;
    double re = 0.0;
    double im = 0.0;
    if (!(ss >> k >> re >> im) || (ss >> rest)) {
      throw ParseError("expected 'k_index real_part imag_part'", lineno);
    }
    if (k < 0 || static_cast<std::size_t>(k) >= terms) throw ParseError("k_index out of range", lineno);
    if (seen[static_cast<std::size_t>(k)]) throw ParseError("duplicate k_index", lineno);
    seen[static_cast<std::size_t>(k)] = true;
    a[static_cast<std::size_t>(k)] = {re, im};
  }
  if (terms == 0) throw ParseError("missing 'L <terms>' header", lineno + 1);
  for (std::size_t k = 0; k < terms; ++k) {
    if (!seen[k]) throw ParseError("missing coefficient k_index " + std::to_string(k), lineno + 1);
  }
  try {
    return OddPolynomial(std::move(a));
  } catch (const PreconditionError& e) {
    throw ParseError(e.what(), lineno);
  }
}

}  // namespace lissel

#endif  // LISSEL_POLY_FRONTEND_HPP
