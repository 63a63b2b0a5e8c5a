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

#ifndef LISSEL_MC_ORACLE_HPP
#define LISSEL_MC_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "error.hpp"
#include "poly_frontend.hpp"
#include "rng.hpp"

namespace lissel {

struct SampleBudget {
  static constexpr std::size_t kMinSamples = 10'000;

  std::size_t n_samples = 1'000'000;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

struct McEstimate {
  BussgangPoint point;  // gain = sum(z conj x) / sum|x|^2,  distortion = mean|z - gain x|^2
  double gain_stderr;
  double distortion_stderr;
  std::size_t n_samples;
};

namespace detail {
inline void check_budget(const SampleBudget& budget) {
  if (budget.n_samples < SampleBudget::kMinSamples) {
    throw PreconditionError("sample budget " + std::to_string(budget.n_samples) +
                            " below the minimum of " + std::to_string(SampleBudget::kMinSamples));
  }
}

inline void draw(const OddPolynomial& model, double rho, const SampleBudget& budget,
                 std::vector<cplx>& x, std::vector<cplx>& z) {
  ComplexGaussianSource src(budget.seed, budget.stream);
  x.resize(budget.n_samples);
  z.resize(budget.n_samples);
  for (std::size_t i = 0; i < budget.n_samples; ++i) {
    x[i] = src.next(rho);
    z[i] = eval_poly(model, x[i]);
  }
}
}  // namespace detail

/// Sample-based LMMSE (Bussgang) decomposition of f(x), x ~ CN(0, rho).
/// Identical (model, rho, budget) give bit-identical results.
inline McEstimate estimate_bussgang(const OddPolynomial& model, double rho, const SampleBudget& budget) {
  detail::check_rho(rho, "estimate_bussgang");
  detail::check_budget(budget);
  std::vector<cplx> x;
  std::vector<cplx> z;
  detail::draw(model, rho, budget, x, z);
  const std::size_t n = budget.n_samples;

  std::complex<long double> zx{0.0L, 0.0L};
  long double xx = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    zx += std::complex<long double>(z[i] * std::conj(x[i]));
    xx += std::norm(x[i]);
  }
  const cplx g{static_cast<double>(zx.real() / xx), static_cast<double>(zx.imag() / xx)};

  long double e1 = 0.0L;
  long double e2 = 0.0L;
  long double ex = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const long double e = std::norm(z[i] - g * x[i]);
    e1 += e;
    e2 += e * e;
    ex += e * std::norm(x[i]);
  }
  const long double nn = static_cast<long double>(n);
  const long double mean = e1 / nn;
  const long double var = std::max(0.0L, e2 / nn - mean * mean);
  return {{rho, g, static_cast<double>(mean)},
          static_cast<double>(std::sqrt(ex) / xx),
          static_cast<double>(std::sqrt(var / (nn - 1.0L))),
          n};
}

/// |mean(eta conj x)| / sqrt(mean|eta|^2 mean|x|^2) with eta = f(x) - gain x,
/// for an externally supplied gain (e.g. the closed form).
inline double residual_correlation(const OddPolynomial& model, double rho, cplx gain,
                                   const SampleBudget& budget) {
  detail::check_rho(rho, "residual_correlation");
  detail::check_budget(budget);
  std::vector<cplx> x;
  std::vector<cplx> z;
  detail::draw(model, rho, budget, x, z);
  std::complex<long double> ex{0.0L, 0.0L};
  long double ee = 0.0L;
  long double xx = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const cplx eta = z[i] - gain * x[i];
    ex += std::complex<long double>(eta * std::conj(x[i]));
    ee += std::norm(eta);
    xx += std::norm(x[i]);
  }
  if (ee == 0.0L) return 0.0;
  return static_cast<double>(std::abs(ex) / std::sqrt(ee * xx));
}

}  // namespace lissel

#endif  // LISSEL_MC_ORACLE_HPP
