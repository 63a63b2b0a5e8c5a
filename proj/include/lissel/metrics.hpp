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

#ifndef LISSEL_METRICS_HPP
#define LISSEL_METRICS_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "poly_frontend.hpp"
#include "scene.hpp"

namespace lissel {

/// Per-panel quantities after the Bussgang decomposition.
struct PanelMetrics {
  std::vector<double> channel_gain;    // |h_n|^2
  std::vector<double> effective_gain;  // |h~_n|^2 = |h_n|^2 |g(rho_n)|^2
  std::vector<double> distortion;      // C(rho_n)
  std::vector<double> rho;             // input power per antenna

  std::size_t size() const noexcept { return rho.size(); }
};

/// One front-end model per panel.
inline PanelMetrics panel_metrics(std::span<const OddPolynomial> models, const SceneLink& link) {
  if (models.size() != link.size()) {
    throw PreconditionError("panel_metrics: " + std::to_string(models.size()) + " models for " +
                            std::to_string(link.size()) + " panels");
  }
  PanelMetrics m;
  for (std::size_t n = 0; n < link.size(); ++n) {
    const BussgangPoint b = bussgang(models[n], link.rho[n]);
    m.channel_gain.push_back(link.gain[n]);
    m.effective_gain.push_back(link.gain[n] * std::norm(b.gain));
    m.distortion.push_back(b.distortion_power);
    m.rho.push_back(link.rho[n]);
  }
  return m;
}

inline PanelMetrics panel_metrics(const OddPolynomial& model, const SceneLink& link) {
  const std::vector<OddPolynomial> models(link.size(), model);
  return panel_metrics(models, link);
}

/// Post-MRC SNDR at per-antenna granularity:
///   P sum|h~|^2 / (sum C |h~|^2 / sum |h~|^2 + sigma2).
inline double sndr_mrc(std::span<const double> gains, std::span<const double> distortions, double p_tx,
                       double sigma2) {
  if (gains.empty() || gains.size() != distortions.size()) {
    throw PreconditionError("sndr_mrc: gain and distortion lists must be nonempty and equal length");
  }
  if (!(sigma2 > 0.0)) throw PreconditionError("sndr_mrc: sigma2 must be > 0");
  double g = 0.0;
  double cg = 0.0;
  for (std::size_t i = 0; i < gains.size(); ++i) {
    g += gains[i];
    cg += distortions[i] * gains[i];
  }
  if (g == 0.0) return 0.0;
  return p_tx * g / (cg / g + sigma2);
}

/// Inner denominator sum of the panel objective: over the selected panels
/// (consistent with per-antenna MRC on the subset) or over all panels.
enum class Normalization { selected, literal };

inline std::string_view to_string(Normalization n) { return n == Normalization::selected ? "selected" : "literal"; }

inline Normalization parse_normalization(std::string_view s) {
  if (s == "selected") return Normalization::selected;
  if (s == "literal") return Normalization::literal;
  throw PreconditionError("unknown normalization '" + std::string(s) + "' (expected selected | literal)");
}

/// Panel objective for the subset `chosen` (panel indices), M antennas per panel.
inline double sndr_subset(std::span<const std::size_t> chosen, const PanelMetrics& m, std::size_t antennas,
                          double p_tx, double sigma2, Normalization norm = Normalization::selected) {
  if (chosen.empty()) return 0.0;
  double g = 0.0;
  double cg = 0.0;
  for (const std::size_t n : chosen) {
    g += m.effective_gain[n];
    cg += m.distortion[n] * m.effective_gain[n];
  }
  if (g == 0.0) return 0.0;
  double norm_sum = g;
  if (norm == Normalization::literal) {
    norm_sum = 0.0;
    for (const double h : m.effective_gain) norm_sum += h;
  }
  return p_tx * static_cast<double>(antennas) * g / (cg / norm_sum + sigma2);
}

/// Same objective for a 0/1 selection vector over all panels.
inline double sndr_panels(std::span<const int> z, const PanelMetrics& m, std::size_t antennas, double p_tx,
                          double sigma2, Normalization norm = Normalization::selected) {
  if (z.size() != m.size()) throw PreconditionError("sndr_panels: selection length differs from panel count");
  std::vector<std::size_t> chosen;
  for (std::size_t n = 0; n < z.size(); ++n) {
    if (z[n] != 0 && z[n] != 1) throw PreconditionError("sndr_panels: selection entries must be 0 or 1");
    if (z[n] == 1) chosen.push_back(n);
  }
  return sndr_subset(chosen, m, antennas, p_tx, sigma2, norm);
}

/// log2(1 + SNDR), bits/s/Hz.
inline double se_lower_bound(double gamma) {
  if (!(gamma >= 0.0)) throw DomainError("se_lower_bound: gamma must be >= 0");
  return std::log2(1.0 + gamma);
}

}  // namespace lissel

#endif  // LISSEL_METRICS_HPP
