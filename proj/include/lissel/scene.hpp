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

#ifndef LISSEL_SCENE_HPP
#define LISSEL_SCENE_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "poly_frontend.hpp"

namespace lissel {

using Vec3 = std::array<double, 3>;

enum class Layout { linear, square_grid };

inline std::string_view to_string(Layout l) { return l == Layout::linear ? "linear" : "square-grid"; }

inline Layout parse_layout(std::string_view s) {
  if (s == "linear") return Layout::linear;
  if (s == "square-grid" || s == "square") return Layout::square_grid;
  throw PreconditionError("unknown layout '" + std::string(s) + "' (expected linear | square-grid)");
}

/// Experiment geometry in wavelengths; defaults follow the panel-selection setup
/// (d = 50 lambda, M = 16, lambda/2 spacing, 5 lambda pitch, SNR 10 dB, 7 dB back-off).
struct SceneConfig {
  std::size_t n_panels = 24;
  std::size_t antennas_per_panel = 16;
  double wavelength = 0.14275706;  // meters, 2.1 GHz
  double panel_pitch_lambda = 5.0;
  double element_spacing_lambda = 0.5;
  Layout layout = Layout::linear;
  double ue_distance_lambda = 50.0;  // from the LIS center
  double ue_offset_lambda = 45.0;    // displacement along the array x-axis at that distance
  double snr_db = 10.0;              // at the LIS center
  double backoff_db = 7.0;
};

/// Panel centers in the z = 0 plane, centered on the origin.
struct LisGeometry {
  std::size_t n_panels;
  std::size_t antennas_per_panel;
  double wavelength;
  double panel_pitch;
  double element_spacing;
  Layout layout;
  std::size_t rows;
  std::size_t cols;
  std::vector<Vec3> centers;
};

/// rows x cols with rows the largest divisor of n not above sqrt(n).
inline std::array<std::size_t, 2> near_square_shape(std::size_t n) {
  std::size_t rows = 1;
  for (std::size_t r = 1; r * r <= n; ++r) {
    if (n % r == 0) rows = r;
  }
  return {rows, n / rows};
}

inline LisGeometry build_geometry(const SceneConfig& cfg) {
  if (cfg.n_panels == 0 || cfg.antennas_per_panel == 0) {
    throw PreconditionError("build_geometry: n_panels and antennas_per_panel must be positive");
  }
  if (!(cfg.wavelength > 0.0) || !(cfg.panel_pitch_lambda > 0.0) || !(cfg.element_spacing_lambda > 0.0)) {
    throw PreconditionError("build_geometry: lengths must be positive");
  }
  const double lambda = cfg.wavelength;
  const double pitch = cfg.panel_pitch_lambda * lambda;
  const double spacing = cfg.element_spacing_lambda * lambda;
  const double side = std::sqrt(static_cast<double>(cfg.antennas_per_panel));
  if (pitch < spacing * (side - 1.0)) {
    throw PreconditionError("build_geometry: panels overlap (pitch below element_spacing * (sqrt(M) - 1))");
  }

  LisGeometry g{cfg.n_panels, cfg.antennas_per_panel, lambda, pitch, spacing, cfg.layout, 1, cfg.n_panels, {}};
  if (cfg.layout == Layout::square_grid) {
    const auto shape = near_square_shape(cfg.n_panels);
    g.rows = shape[0];
    g.cols = shape[1];
  }
  g.centers.reserve(cfg.n_panels);
  const double x0 = 0.5 * static_cast<double>(g.cols - 1);
  const double y0 = 0.5 * static_cast<double>(g.rows - 1);
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < g.cols; ++c) {
      g.centers.push_back({(static_cast<double>(c) - x0) * pitch, (static_cast<double>(r) - y0) * pitch, 0.0});
    }
  }
  return g;
}

/// Free-space power gain (lambda / (4 pi d))^2 between isotropic elements.
inline double path_gain(double distance, double wavelength) {
  if (!(distance > 0.0)) throw PreconditionError("path_gain: distance must be positive");
  const double a = wavelength / (4.0 * std::numbers::pi * distance);
  return a * a;
}

/// Noise power giving `snr_db` for received power p_tx * center_gain.
inline double calibrate_noise(double p_tx, double center_gain, double snr_db) {
  if (!(p_tx > 0.0) || !(center_gain > 0.0) || !std::isfinite(snr_db)) {
    throw PreconditionError("calibrate_noise: p_tx and center_gain must be positive, snr finite");
  }
  return p_tx * center_gain / std::pow(10.0, snr_db / 10.0);
}

/// UE at distance d from the LIS center, displaced by `offset` along x.
inline Vec3 ue_position(const SceneConfig& cfg) {
  const double d = cfg.ue_distance_lambda;
  const double off = cfg.ue_offset_lambda;
  if (!(d > 0.0) || !(std::abs(off) <= d)) {
    throw PreconditionError("ue_position: need ue_distance > 0 and |ue_offset| <= ue_distance");
  }
  return {off * cfg.wavelength, 0.0, std::sqrt(d * d - off * off) * cfg.wavelength};
}

inline double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Per-panel LOS link. Every antenna of panel n shares gain[n] (far field per panel).
struct SceneLink {
  std::vector<double> distance;  // meters
  std::vector<double> gain;      // |h_n|^2
  std::vector<double> rho;       // p_tx |h_n|^2
  double sigma2;
  double p_tx;
  double center_gain;

  std::size_t size() const noexcept { return gain.size(); }
};

inline SceneLink link_state(const LisGeometry& geom, const Vec3& ue, const OperatingPoint& op,
                            double snr_db_at_center) {
  SceneLink link;
  link.p_tx = effective_power(op);
  const double d_center = distance(ue, Vec3{0.0, 0.0, 0.0});
  if (!(d_center > 0.0)) throw PreconditionError("link_state: UE coincides with the LIS center");
  link.center_gain = path_gain(d_center, geom.wavelength);
  link.sigma2 = calibrate_noise(link.p_tx, link.center_gain, snr_db_at_center);
  for (std::size_t n = 0; n < geom.centers.size(); ++n) {
    const double d = distance(ue, geom.centers[n]);
    if (!(d > 0.0)) {
      throw PreconditionError("link_state: UE coincides with panel " + std::to_string(n) + " center");
    }
    const double h2 = path_gain(d, geom.wavelength);
    link.distance.push_back(d);
    link.gain.push_back(h2);
    link.rho.push_back(link.p_tx * h2);
  }
  return link;
}

}  // namespace lissel

#endif  // LISSEL_SCENE_HPP
