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


#include <cmath>
#include <complex>
#include <vector>

#include "catch_amalgamated.hpp"
#include "lissel/fixtures.hpp"
#include "lissel/mc_oracle.hpp"
#include "lissel/rng.hpp"
#include "oracles.hpp"

using lissel::cplx;
using lissel::OddPolynomial;
using lissel::SampleBudget;

namespace {

const OddPolynomial kCubic({cplx{1.0, 0.0}, cplx{-0.1, 0.0}});

}  // namespace

TEST_CASE("stream seeding", "[rng]") {
  // Reference SplitMix64 output for state 0.
  CHECK(lissel::splitmix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(lissel::stream_seed(1, 0) != lissel::stream_seed(1, 1));
  CHECK(lissel::stream_seed(1, 0) != lissel::stream_seed(0, 1));
  CHECK(lissel::stream_seed(42, 7) == lissel::stream_seed(42, 7));
}

TEST_CASE("complex Gaussian source moments", "[rng]") {
  lissel::ComplexGaussianSource src(3);
  const int n = 200000;
  double re = 0.0, im = 0.0, power = 0.0, cross = 0.0, re2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const cplx x = src.next(2.0);
    re += x.real();
    im += x.imag();
    re2 += x.real() * x.real();
    power += std::norm(x);
    cross += x.real() * x.imag();
  }
  // 5 sigma bounds for n = 2e5.
  CHECK(std::abs(re / n) < 5.0 * std::sqrt(1.0 / n));
  CHECK(std::abs(im / n) < 5.0 * std::sqrt(1.0 / n));
  CHECK(std::abs(power / n - 2.0) < 5.0 * 2.0 / std::sqrt(n));
  CHECK(std::abs(re2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(cross / n) < 5.0 / std::sqrt(n));
  for (int i = 0; i < 1000; ++i) {
    const double u = src.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("identity model estimates unit gain and no distortion", "[mc]") {
  const auto e = lissel::estimate_bussgang(OddPolynomial::identity(), 1.0, {1'000'000, 1, 0});
  CHECK(std::abs(e.point.gain - cplx{1.0, 0.0}) <= 3.0 * e.gain_stderr + 1e-15);
  CHECK(e.point.distortion_power <= 1e-28);
  CHECK(e.n_samples == 1'000'000);
}

TEST_CASE("cubic hand example within three standard errors", "[mc]") {
  const auto e = lissel::estimate_bussgang(kCubic, 0.5, {1'000'000, 2026, 0});
  REQUIRE(e.gain_stderr > 0.0);
  REQUIRE(e.distortion_stderr > 0.0);
  CHECK(std::abs(e.point.gain.real() - 0.9) <= 3.0 * e.gain_stderr);
  CHECK(std::abs(e.point.gain.imag()) <= 3.0 * e.gain_stderr);
  CHECK(std::abs(e.point.distortion_power - 0.0025) <= 3.0 * e.distortion_stderr);
}

TEST_CASE("estimates are bit-identical for the same seed and stream", "[mc]") {
  const SampleBudget b{50'000, 99, 4};
  const auto a = lissel::estimate_bussgang(kCubic, 0.7, b);
  const auto c = lissel::estimate_bussgang(kCubic, 0.7, b);
  CHECK(a.point.gain == c.point.gain);
  CHECK(a.point.distortion_power == c.point.distortion_power);
  CHECK(a.gain_stderr == c.gain_stderr);
  const auto d = lissel::estimate_bussgang(kCubic, 0.7, {50'000, 99, 5});
  CHECK(a.point.gain != d.point.gain);
}

TEST_CASE("budget and power preconditions", "[mc]") {
  CHECK_THROWS_AS(lissel::estimate_bussgang(kCubic, 0.5, {1000, 0, 0}), lissel::PreconditionError);
  CHECK_THROWS_AS(lissel::estimate_bussgang(kCubic, 0.5, {SampleBudget::kMinSamples - 1, 0, 0}),
                  lissel::PreconditionError);
  CHECK_NOTHROW(lissel::estimate_bussgang(kCubic, 0.5, {SampleBudget::kMinSamples, 0, 0}));
  CHECK_THROWS_AS(lissel::estimate_bussgang(kCubic, 0.0, {}), lissel::DomainError);
  CHECK_THROWS_AS(lissel::estimate_bussgang(kCubic, -2.0, {}), lissel::DomainError);
}

TEST_CASE("gain standard error shrinks as one over root n", "[mc][property]") {
  const OddPolynomial m = lissel::standin_amplifier();
  for (const double rho : {0.5, 2.0}) {
    const auto small = lissel::estimate_bussgang(m, rho, {100'000, 8, 0});
    const auto large = lissel::estimate_bussgang(m, rho, {400'000, 8, 1});
    const double ratio = small.gain_stderr / large.gain_stderr;
    CHECK(ratio >= 1.8);
    CHECK(ratio <= 2.2);
  }
}

TEST_CASE("residual is uncorrelated with the input", "[mc]") {
  const OddPolynomial m = lissel::standin_amplifier();
  for (const double rho : {0.3, 1.0, 2.5}) {
    const SampleBudget b{1'000'000, 17, 0};
    const auto e = lissel::estimate_bussgang(m, rho, b);
    CHECK(lissel::residual_correlation(m, rho, e.point.gain, b) <= 1e-2);
    CHECK(lissel::residual_correlation(m, rho, lissel::bussgang_gain(m, rho), b) <= 1e-2);
  }
  CHECK(lissel::residual_correlation(kCubic, 0.5, lissel::bussgang_gain(kCubic, 0.5), {1'000'000, 3, 0}) <= 1e-2);
}

TEST_CASE("random models agree with quadrature within sampling error", "[mc][property]") {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = oracle::random_coeffs(rng, 2 + trial % 4);
    const double rho = 0.2 + 0.08 * trial;
    const auto ref = oracle::bussgang_moments(a, rho);
    const auto e = lissel::estimate_bussgang(OddPolynomial(a), rho, {200'000, 1234, static_cast<unsigned>(trial)});
    const std::complex<double> g(static_cast<double>(ref.gain.real()), static_cast<double>(ref.gain.imag()));
    CHECK(std::abs(e.point.gain - g) <= 5.0 * std::sqrt(2.0) * e.gain_stderr);
    CHECK(std::abs(e.point.distortion_power - static_cast<double>(ref.distortion)) <= 5.0 * e.distortion_stderr);
  }
}
