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

#ifndef LISSEL_FIXTURES_HPP
#define LISSEL_FIXTURES_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "exp_model.hpp"
#include "metrics.hpp"
#include "numeric.hpp"
#include "poly_frontend.hpp"
#include "scene.hpp"
#include "selection.hpp"

namespace lissel {

/// Saturation input power of the canonical stand-in in working units
/// (milliwatts: the limiter knee sits at 10 dBm).
inline constexpr double kStandinSaturationPower = 10.0;

/// Canonical stand-in front end: p = 2 soft limiter, L = 6 (order 11), fitted
/// over normalized amplitude [0, 1.2], then expressed in working units where
/// saturation input power is `saturation_power`.
inline OddPolynomial standin_amplifier(double saturation_power = kStandinSaturationPower) {
  const StandinFit fit = fit_standin_amplifier(soft_limiter(2.0), 6, {0.0, 1.2});
  return rescale_input(fit.model, std::sqrt(saturation_power));
}

/// 0 dB back-off reference: the Gaussian-input 1 dB compression power.
inline double reference_power(const OddPolynomial& model, double saturation_power = kStandinSaturationPower) {
  return gaussian_compression_point(model, saturation_power, 1.0);
}

struct BackoffSettings {
  double snr_db = 10.0;  // sigma2 = operating power / 10^(snr/10)
  std::size_t grid_points = 32;
  double grid_decades = 2.0;  // grid starts this many decades below the operating power
  FitOptions fit{};
};

/// Everything derived for one back-off level: SISO problem data and the
/// surrogate fitted to the polynomial distortion over the operating range.
struct BackoffFixture {
  double backoff_db;
  double rho_op;   // reference power reduced by the back-off
  double rho_max;  // the reference power itself
  double sigma2;
  std::vector<DistortionSample> samples;
  ExpFit fit;

  SisoProblem siso() const { return SisoProblem(fit.model, sigma2, rho_max); }
};

inline std::vector<DistortionSample> sample_distortion(const OddPolynomial& model, double lo, double hi,
                                                       std::size_t points) {
  std::vector<DistortionSample> out;
  for (const double r : numeric::log_grid(lo, hi, points)) out.push_back({r, distortion_power(model, r)});
  return out;
}

inline BackoffFixture make_backoff_fixture(const OddPolynomial& model, double rho_ref, double backoff_db,
                                           const BackoffSettings& s = {}) {
  const double rho_op = effective_power(OperatingPoint(rho_ref, backoff_db));
  const double sigma2 = rho_op / std::pow(10.0, s.snr_db / 10.0);
  auto samples = sample_distortion(model, rho_op * std::pow(10.0, -s.grid_decades), rho_ref, s.grid_points);
  ExpFit fit = fit_exp(samples, s.fit);
  return {backoff_db, rho_op, rho_ref, sigma2, std::move(samples), std::move(fit)};
}

struct SceneProblem {
  SceneConfig config;
  LisGeometry geometry;
  Vec3 ue;
  SceneLink link;
  double p_ref;
  SelectionProblem problem;
};

/// ceil(0.1 * n_panels), at least one.
inline std::size_t default_n_max(std::size_t n_panels) { return std::max<std::size_t>(1, (n_panels + 9) / 10); }

/// Scene with p_ref chosen so the LIS center would receive rho_ref at 0 dB
/// back-off; the configured back-off then lowers the transmit power.
inline SceneProblem build_scene_problem(const OddPolynomial& model, double rho_ref, const SceneConfig& cfg,
                                        std::size_t n_max, Normalization norm = Normalization::selected) {
  const LisGeometry geom = build_geometry(cfg);
  const Vec3 ue = ue_position(cfg);
  const double d_center = distance(ue, Vec3{0.0, 0.0, 0.0});
  const double p_ref = rho_ref / path_gain(d_center, cfg.wavelength);
  SceneLink link = link_state(geom, ue, OperatingPoint(p_ref, cfg.backoff_db), cfg.snr_db);
  SelectionProblem prob{panel_metrics(model, link), cfg.antennas_per_panel, link.p_tx, link.sigma2, n_max, norm};
  prob.validate();
  return {cfg, geom, ue, std::move(link), p_ref, std::move(prob)};
}

}  // namespace lissel

#endif  // LISSEL_FIXTURES_HPP
