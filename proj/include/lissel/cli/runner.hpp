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

#ifndef LISSEL_CLI_RUNNER_HPP
#define LISSEL_CLI_RUNNER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "../error.hpp"
#include "../exp_model.hpp"
#include "../fixtures.hpp"
#include "../format.hpp"
#include "../mc_oracle.hpp"
#include "../metrics.hpp"
#include "../parallel.hpp"
#include "../poly_frontend.hpp"
#include "../scene.hpp"
#include "../selection.hpp"

namespace lissel::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kValidationFailure = 3 };

using json = nlohmann::ordered_json;

/// Invalid or unparsable configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fully resolved parameter set. Every field is a config-file key of the same name.
struct ExperimentConfig {
  std::string amplifier = "standin";  // standin | identity | path to a polynomial fixture
  double saturation_power = kStandinSaturationPower;
  std::vector<double> backoffs_db{1.0, 4.0, 7.0};
  std::optional<double> sigma2;   // overrides the per-back-off noise of opt-power
  std::optional<double> rho_max;  // overrides the per-back-off upper power bound
  std::size_t fit_grid_points = 32;
  double fit_grid_decades = 2.0;
  std::string fit_weighting = "absolute";
  double q_min = 2.0;
  double q_max = 12.0;
  std::string samples_csv;  // optional (rho, C) input for `fit`

  SceneConfig scene{};
  std::vector<std::size_t> n_panels_list{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  std::optional<std::size_t> n_max;  // default ceil(0.1 n_panels)
  std::string normalization = "selected";
  std::vector<std::string> solvers{"oracle", "gain", "closedform2"};
  std::size_t budget = 2'000'000;

  std::size_t mc_samples = 1'000'000;
  std::size_t mc_points = 8;
  double mc_grid_decades = 2.0;
  double mc_gain_tol = 0.01;
  double mc_distortion_rel_tol = 0.02;
  double mc_distortion_abs_tol = 1e-6;

  std::optional<double> rho;  // `bussgang` query point

  std::uint64_t seed = 0;
  unsigned threads = 1;
};

namespace detail {
template <typename T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}
}  // namespace detail

inline json to_json(const ExperimentConfig& c) {
  json j;
  j["amplifier"] = c.amplifier;
  j["saturation_power"] = c.saturation_power;
  j["backoffs_db"] = c.backoffs_db;
  j["sigma2"] = detail::opt_json(c.sigma2);
  j["rho_max"] = detail::opt_json(c.rho_max);
  j["fit_grid_points"] = c.fit_grid_points;
  j["fit_grid_decades"] = c.fit_grid_decades;
  j["fit_weighting"] = c.fit_weighting;
  j["q_min"] = c.q_min;
  j["q_max"] = c.q_max;
  j["samples_csv"] = c.samples_csv;
  j["n_panels"] = c.scene.n_panels;
  j["antennas_per_panel"] = c.scene.antennas_per_panel;
  j["wavelength"] = c.scene.wavelength;
  j["panel_pitch_lambda"] = c.scene.panel_pitch_lambda;
  j["element_spacing_lambda"] = c.scene.element_spacing_lambda;
  j["layout"] = std::string(to_string(c.scene.layout));
  j["ue_distance_lambda"] = c.scene.ue_distance_lambda;
  j["ue_offset_lambda"] = c.scene.ue_offset_lambda;
  j["snr_db"] = c.scene.snr_db;
  j["backoff_db"] = c.scene.backoff_db;
  j["n_panels_list"] = c.n_panels_list;
  j["n_max"] = detail::opt_json(c.n_max);
  j["normalization"] = c.normalization;
  j["solvers"] = c.solvers;
  j["budget"] = c.budget;
  j["mc_samples"] = c.mc_samples;
  j["mc_points"] = c.mc_points;
  j["mc_grid_decades"] = c.mc_grid_decades;
  j["mc_gain_tol"] = c.mc_gain_tol;
  j["mc_distortion_rel_tol"] = c.mc_distortion_rel_tol;
  j["mc_distortion_abs_tol"] = c.mc_distortion_abs_tol;
  j["rho"] = detail::opt_json(c.rho);
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j;
}

inline ExperimentConfig from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  const json defaults = to_json(ExperimentConfig{});
  for (const auto& [key, _] : j.items()) {
    if (!defaults.contains(key)) throw ConfigError("unknown configuration key '" + key + "'");
  }
  ExperimentConfig c;
  auto get = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
  };
  auto get_opt = [&](const char* key, auto& field) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    typename std::remove_reference_t<decltype(field)>::value_type v{};
    get(key, v);
    field = v;
  };
  get("amplifier", c.amplifier);
  get("saturation_power", c.saturation_power);
  get("backoffs_db", c.backoffs_db);
  get_opt("sigma2", c.sigma2);
  get_opt("rho_max", c.rho_max);
  get("fit_grid_points", c.fit_grid_points);
  get("fit_grid_decades", c.fit_grid_decades);
  get("fit_weighting", c.fit_weighting);
  get("q_min", c.q_min);
  get("q_max", c.q_max);
  get("samples_csv", c.samples_csv);
  get("n_panels", c.scene.n_panels);
  get("antennas_per_panel", c.scene.antennas_per_panel);
  get("wavelength", c.scene.wavelength);
  get("panel_pitch_lambda", c.scene.panel_pitch_lambda);
  get("element_spacing_lambda", c.scene.element_spacing_lambda);
  std::string layout = std::string(to_string(c.scene.layout));
  get("layout", layout);
  get("ue_distance_lambda", c.scene.ue_distance_lambda);
  get("ue_offset_lambda", c.scene.ue_offset_lambda);
  get("snr_db", c.scene.snr_db);
  get("backoff_db", c.scene.backoff_db);
  get("n_panels_list", c.n_panels_list);
  get_opt("n_max", c.n_max);
  get("normalization", c.normalization);
  get("solvers", c.solvers);
  get("budget", c.budget);
  get("mc_samples", c.mc_samples);
  get("mc_points", c.mc_points);
  get("mc_grid_decades", c.mc_grid_decades);
  get("mc_gain_tol", c.mc_gain_tol);
  get("mc_distortion_rel_tol", c.mc_distortion_rel_tol);
  get("mc_distortion_abs_tol", c.mc_distortion_abs_tol);
  get_opt("rho", c.rho);
  get("seed", c.seed);
  get("threads", c.threads);
  try {
    c.scene.layout = parse_layout(layout);
    parse_normalization(c.normalization);
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  if (c.fit_weighting != "absolute" && c.fit_weighting != "log") {
    throw ConfigError("fit_weighting must be absolute | log");
  }
  for (const auto& s : c.solvers) {
    if (s != "oracle" && s != "exhaustive" && s != "local" && s != "gain" && s != "closedform1" &&
        s != "closedform2") {
      throw ConfigError("unknown solver '" + s + "' (exhaustive | local | gain | closedform1 | closedform2 | oracle)");
    }
  }
  return c;
}

inline json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open config file " + p.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + p.string() + ": " + e.what());
  }
}

/// Defaults < config file < command-line overrides. A run manifest is accepted
/// as a config file: its "config" block is the fully resolved parameter set.
inline ExperimentConfig resolve_config(const std::optional<std::filesystem::path>& file, const json& overrides) {
  json j = to_json(ExperimentConfig{});
  if (file) {
    json f = read_json_file(*file);
    if (f.is_object() && f.contains("config") && f.contains("command")) f = f.at("config");
    j.merge_patch(f);
  }
  j.merge_patch(overrides);
  return from_json(j);
}

// ---------------------------------------------------------------------------
// Output handling

/// Collects CSV text in memory; header first, fields comma-separated, LF endings.
class Csv {
 public:
  explicit Csv(std::initializer_list<std::string> header) { row(std::vector<std::string>(header)); }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) text_ += ',';
      text_ += fields[i];
    }
    text_ += '\n';
  }

  const std::string& str() const noexcept { return text_; }

 private:
  std::string text_;
};

inline std::string fmt(double v) { return format_double(v); }

/// Compact label for a back-off value in file names ("7", "2.5").
inline std::string boff_label(double b) {
  std::ostringstream os;
  os << b;
  return os.str();
}

class Run {
 public:
  Run(std::string command, ExperimentConfig cfg, std::filesystem::path out_dir, std::ostream& diag = std::cerr)
      : diag_(&diag),
        command_(std::move(command)),
        cfg_(std::move(cfg)),
        out_dir_(std::move(out_dir)),
        start_(std::chrono::steady_clock::now()),
        started_utc_(std::time(nullptr)) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir_, ec);
    if (ec) throw ConfigError("cannot create output directory " + out_dir_.string() + ": " + ec.message());
  }

  const ExperimentConfig& config() const noexcept { return cfg_; }
  const std::filesystem::path& out_dir() const noexcept { return out_dir_; }
  json& notes() noexcept { return notes_; }
  std::ostream& diag() noexcept { return *diag_; }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(out_dir_ / name, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("failed to write " + (out_dir_ / name).string());
    outputs_.push_back(name);
  }

  std::filesystem::path manifest_path() const { return out_dir_ / ("manifest_" + command_ + ".json"); }

  void finish(int exit_code) {
    json m;
    m["tool"] = "lissel";
    m["version"] = kToolVersion;
    m["command"] = command_;
    m["config"] = to_json(cfg_);
    m["seeds"] = {{"master", cfg_.seed}};
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&started_utc_));
    m["started_utc"] = stamp;
    m["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m["exit_code"] = exit_code;
    m["outputs"] = outputs_;
    m["notes"] = notes_;
    std::ofstream out(manifest_path(), std::ios::binary | std::ios::trunc);
    out << m.dump(2) << '\n';
  }

 private:
  std::ostream* diag_;
  std::string command_;
  ExperimentConfig cfg_;
  std::filesystem::path out_dir_;
  std::chrono::steady_clock::time_point start_;
  std::time_t started_utc_;
  std::vector<std::string> outputs_;
  json notes_ = json::object();
};

// ---------------------------------------------------------------------------
// Shared setup

inline OddPolynomial load_amplifier(const ExperimentConfig& cfg) {
  if (cfg.amplifier == "standin") return standin_amplifier(cfg.saturation_power);
  if (cfg.amplifier == "identity") return OddPolynomial::identity();
  std::ifstream in(cfg.amplifier);
  if (!in) throw ConfigError("cannot open amplifier fixture " + cfg.amplifier);
  try {
    return read_polynomial(in);
  } catch (const ParseError& e) {
    throw ConfigError("amplifier fixture " + cfg.amplifier + ": " + e.what());
  }
}

/// Gaussian 1 dB compression power, or the saturation power for a model that
/// never compresses (e.g. the identity).
inline double resolve_reference_power(const OddPolynomial& model, const ExperimentConfig& cfg, json* notes) {
  try {
    return reference_power(model, cfg.saturation_power);
  } catch (const DomainError&) {
    if (notes) (*notes)["reference_power_fallback"] = "model never compresses; saturation_power used";
    return cfg.saturation_power;
  }
}

inline BackoffSettings backoff_settings(const ExperimentConfig& cfg) {
  BackoffSettings s;
  s.snr_db = cfg.scene.snr_db;
  s.grid_points = cfg.fit_grid_points;
  s.grid_decades = cfg.fit_grid_decades;
  s.fit.q_lo = cfg.q_min;
  s.fit.q_hi = cfg.q_max;
  s.fit.weighting = cfg.fit_weighting == "log" ? FitWeighting::log : FitWeighting::absolute;
  return s;
}

// ---------------------------------------------------------------------------
// Commands

/// EXP fit to the polynomial distortion per back-off: fig2_<b>.csv + fig2_<b>_model.txt.
inline int cmd_fit(Run& run) {
  const auto& cfg = run.config();
  const auto settings = backoff_settings(cfg);
  if (!cfg.samples_csv.empty()) {
    std::ifstream in(cfg.samples_csv);
    if (!in) throw ConfigError("cannot open samples file " + cfg.samples_csv);
    std::vector<DistortionSample> samples;
    try {
      samples = read_samples_csv(in);
    } catch (const ParseError& e) {
      throw ConfigError("samples file " + cfg.samples_csv + ": " + e.what());
    }
    const ExpFit fit = fit_exp(samples, settings.fit);
    Csv csv{"rho", "c_input", "c_exp"};
    for (const auto& s : samples) csv.row({fmt(s.rho), fmt(s.c), fmt(eval_exp(fit.model, s.rho))});
    std::ostringstream rec;
    write_exp_record(rec, fit.model, fit.rmse);
    run.write("fit_samples.csv", csv.str());
    run.write("fit_samples_model.txt", rec.str());
    for (const auto& w : fit.warnings) run.diag() << "warning: " << w << '\n';
    run.notes()["warnings"] = fit.warnings;
    return kOk;
  }

  const OddPolynomial model = load_amplifier(cfg);
  const double rho_ref = resolve_reference_power(model, cfg, &run.notes());
  run.notes()["reference_power"] = rho_ref;
  struct Out {
    std::string csv;
    std::string record;
    json note;
  };
  const auto outs = parallel_map<Out>(cfg.backoffs_db.size(), cfg.threads, [&](std::size_t i) {
    const BackoffFixture fx = make_backoff_fixture(model, rho_ref, cfg.backoffs_db[i], settings);
    Csv csv{"rho", "c_mlp", "c_exp"};
    double c_max = 0.0;
    for (const auto& s : fx.samples) {
      csv.row({fmt(s.rho), fmt(s.c), fmt(eval_exp(fx.fit.model, s.rho))});
      c_max = std::max(c_max, s.c);
    }
    std::ostringstream rec;
    write_exp_record(rec, fx.fit.model, fx.fit.rmse);
    json note{{"backoff_db", fx.backoff_db},   {"beta", fx.fit.model.beta},   {"q", fx.fit.model.q},
              {"rmse", fx.fit.rmse},            {"rmse_over_max_c", fx.fit.rmse / c_max},
              {"rho_op", fx.rho_op},            {"rho_max", fx.rho_max},       {"sigma2", fx.sigma2},
              {"q_at_lower_bound", fx.fit.q_at_lower_bound},                   {"warnings", fx.fit.warnings}};
    if (fx.fit.q_at_lower_bound) {
      note["free_q"] = fx.fit.free_q;
      note["free_rmse"] = fx.fit.free_rmse;
    }
    return Out{csv.str(), rec.str(), note};
  });
  json fits = json::array();
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const std::string label = boff_label(cfg.backoffs_db[i]);
    run.write("fig2_" + label + ".csv", outs[i].csv);
    run.write("fig2_" + label + "_model.txt", outs[i].record);
    for (const auto& w : outs[i].note["warnings"]) run.diag() << "warning: " << w.get<std::string>() << '\n';
    fits.push_back(outs[i].note);
  }
  run.notes()["fits"] = fits;
  return kOk;
}

/// Numeric optimum of the surrogate SISO problem vs both closed forms: fig3.csv.
inline int cmd_opt_power(Run& run) {
  const auto& cfg = run.config();
  const auto settings = backoff_settings(cfg);
  const OddPolynomial model = load_amplifier(cfg);
  const double rho_ref = resolve_reference_power(model, cfg, &run.notes());

  struct Row {
    std::vector<std::string> fields;
    json note;
    double sq1;
    double sq2;
  };
  const auto rows = parallel_map<Row>(cfg.backoffs_db.size(), cfg.threads, [&](std::size_t i) {
    const double b = cfg.backoffs_db[i];
    const auto record_path = run.out_dir() / ("fig2_" + boff_label(b) + "_model.txt");
    const BackoffFixture fx = make_backoff_fixture(model, rho_ref, b, settings);
    ExpDistortion fitted = fx.fit.model;
    std::string source = "fitted";
    if (std::ifstream rec(record_path); rec) {
      try {
        fitted = read_exp_record(rec).model;
        source = record_path.filename().string();
      } catch (const ParseError& e) {
        throw ConfigError(record_path.string() + ": " + e.what());
      }
    }
    const double sigma2 = cfg.sigma2.value_or(fx.sigma2);
    const double rho_max = cfg.rho_max.value_or(fx.rho_max);
    const SisoProblem prob(fitted, sigma2, rho_max);
    const RhoOptimum num = optimum_rho_numeric(prob);
    const double o2 = rho_opt2(fitted, sigma2);
    std::optional<double> o1;
    try {
      o1 = rho_opt1(fitted, sigma2);
    } catch (const DomainError&) {
    }
    const double sq2 = (o2 - num.rho) * (o2 - num.rho);
    const double sq1 = o1 ? (*o1 - num.rho) * (*o1 - num.rho) : std::nan("");
    Row r;
    r.fields = {fmt(b), fmt(num.rho), o1 ? fmt(*o1) : "", fmt(o2), o1 ? fmt(sq1) : "", fmt(sq2)};
    r.note = {{"backoff_db", b},   {"model_source", source},           {"sigma2", sigma2},
              {"rho_max", rho_max}, {"numeric_at_boundary", num.at_boundary}};
    r.sq1 = sq1;
    r.sq2 = sq2;
    return r;
  });
  Csv csv{"boff", "rho_numeric", "rho_opt1", "rho_opt2", "sqerr1", "sqerr2"};
  json per = json::array();
  double m1 = 0.0, m2 = 0.0;
  std::size_t n1 = 0;
  for (const auto& r : rows) {
    csv.row(r.fields);
    per.push_back(r.note);
    if (!std::isnan(r.sq1)) {
      m1 += r.sq1;
      ++n1;
    }
    m2 += r.sq2;
  }
  run.write("fig3.csv", csv.str());
  run.notes()["fixtures"] = per;
  run.notes()["mse_opt1"] = n1 ? json(m1 / static_cast<double>(n1)) : json(nullptr);
  run.notes()["mse_opt2"] = rows.empty() ? json(nullptr) : json(m2 / static_cast<double>(rows.size()));
  return kOk;
}

/// Panel-selection sweep over n_panels_list: fig4.csv.
inline int cmd_select(Run& run) {
  const auto& cfg = run.config();
  const OddPolynomial model = load_amplifier(cfg);
  const double rho_ref = resolve_reference_power(model, cfg, &run.notes());
  const Normalization norm = parse_normalization(cfg.normalization);

  bool needs_fit = false;
  for (const auto& s : cfg.solvers) needs_fit |= (s == "closedform1" || s == "closedform2");
  std::optional<BackoffFixture> fx;
  if (needs_fit) fx = make_backoff_fixture(model, rho_ref, cfg.scene.backoff_db, backoff_settings(cfg));

  std::vector<std::size_t> sizes = cfg.n_panels_list;
  if (sizes.empty()) sizes.push_back(cfg.scene.n_panels);
  for (const auto n : sizes) {
    if (cfg.n_max && (*cfg.n_max < 1 || *cfg.n_max > n)) {
      throw ConfigError("n_max " + std::to_string(*cfg.n_max) + " outside [1, " + std::to_string(n) + "]");
    }
  }
  struct Out {
    std::vector<std::vector<std::string>> rows;
    json note;
  };
  const auto outs = parallel_map<Out>(sizes.size(), cfg.threads, [&](std::size_t i) {
    SceneConfig sc = cfg.scene;
    sc.n_panels = sizes[i];
    const std::size_t n_max = cfg.n_max.value_or(default_n_max(sc.n_panels));
    const SceneProblem scene = build_scene_problem(model, rho_ref, sc, n_max, norm);
    const auto& prob = scene.problem;
    ExhaustiveBudget budget;
    budget.max_evaluations = cfg.budget;
    budget.max_panels = std::max<std::size_t>(budget.max_panels, 64);
    Out out;
    out.note = {{"n_panels", sc.n_panels}, {"n_max", n_max}, {"sigma2", prob.sigma2}, {"p_tx", prob.p_tx}};
    json solvers = json::object();
    for (const auto& name : cfg.solvers) {
      SelectionResult r;
      if (name == "exhaustive" || (name == "oracle" && exhaustive_feasible(prob, budget))) {
        r = solve_exhaustive(prob, budget);
      } else if (name == "local" || name == "oracle") {
        r = solve_local_search(prob, {stream_seed(cfg.seed, i), 1000, 4});
      } else if (name == "gain") {
        r = solve_gain_topk(prob);
      } else {
        r = solve_closed_form(prob, fx->fit.model,
                              name == "closedform1" ? ClosedFormRule::opt1 : ClosedFormRule::opt2, fx->rho_max);
      }
      out.rows.push_back({std::to_string(sc.n_panels), r.solver, fmt(r.sndr), fmt(r.se),
                          std::to_string(r.chosen.size())});
      json s{{"solver", r.solver}, {"chosen", r.chosen}, {"objective_evals", r.objective_evals}};
      if (r.rho_target) {
        s["rho_target"] = *r.rho_target;
        s["target_at_boundary"] = r.target_at_boundary;
      }
      solvers[name] = s;
    }
    out.note["solvers"] = solvers;
    return out;
  });
  Csv csv{"n_panels", "solver", "sndr", "se", "n_selected"};
  json per = json::array();
  for (const auto& o : outs) {
    for (const auto& r : o.rows) csv.row(r);
    per.push_back(o.note);
  }
  run.write("fig4.csv", csv.str());
  run.notes()["layout"] = std::string(to_string(cfg.scene.layout));
  run.notes()["reference_power"] = rho_ref;
  if (fx) run.notes()["fit"] = {{"beta", fx->fit.model.beta}, {"q", fx->fit.model.q}, {"rmse", fx->fit.rmse}};
  run.notes()["sweep"] = per;
  return kOk;
}

/// Closed-form Bussgang parameters vs Monte-Carlo estimates: bussgang_check.csv.
inline int cmd_mc_validate(Run& run) {
  const auto& cfg = run.config();
  if (cfg.mc_samples < SampleBudget::kMinSamples) {
    throw PreconditionError("mc_samples " + std::to_string(cfg.mc_samples) + " below the minimum of " +
                            std::to_string(SampleBudget::kMinSamples));
  }
  if (cfg.mc_points < 2) throw ConfigError("mc_points must be >= 2");
  const OddPolynomial model = load_amplifier(cfg);
  const double rho_ref = resolve_reference_power(model, cfg, &run.notes());

  struct Point {
    double b;
    double rho;
  };
  std::vector<Point> points;
  for (const double b : cfg.backoffs_db) {
    const double rho_op = effective_power(OperatingPoint(rho_ref, b));
    for (const double r : numeric::log_grid(rho_op * std::pow(10.0, -cfg.mc_grid_decades), rho_op, cfg.mc_points)) {
      points.push_back({b, r});
    }
  }
  struct Row {
    std::vector<std::string> fields;
    bool pass;
  };
  const auto rows = parallel_map<Row>(points.size(), cfg.threads, [&](std::size_t i) {
    const auto [b, rho] = points[i];
    const BussgangPoint exact = bussgang(model, rho);
    const McEstimate est = estimate_bussgang(model, rho, {cfg.mc_samples, cfg.seed, i});
    const double g_err = std::abs(est.point.gain - exact.gain) / std::abs(exact.gain);
    const double c_err = std::abs(est.point.distortion_power - exact.distortion_power);
    const double c_tol = std::max(cfg.mc_distortion_rel_tol * exact.distortion_power, cfg.mc_distortion_abs_tol);
    const bool pass = g_err <= cfg.mc_gain_tol && c_err <= c_tol;
    return Row{{fmt(b), fmt(rho), fmt(std::abs(exact.gain)), fmt(std::abs(est.point.gain)), fmt(g_err),
                fmt(est.gain_stderr / std::abs(exact.gain)), fmt(exact.distortion_power),
                fmt(est.point.distortion_power), fmt(c_err), fmt(est.distortion_stderr), fmt(c_tol),
                pass ? "1" : "0"},
               pass};
  });
  Csv csv{"boff",   "rho",      "g_closed",     "g_mc",  "g_rel_err", "g_rel_stderr",
          "c_closed", "c_mc", "c_abs_err", "c_stderr", "c_tol", "pass"};
  std::vector<std::string> failures;
  for (const auto& r : rows) {
    csv.row(r.fields);
    if (!r.pass) {
      std::string line;
      for (std::size_t k = 0; k < r.fields.size(); ++k) line += (k ? "," : "") + r.fields[k];
      failures.push_back(line);
    }
  }
  run.write("bussgang_check.csv", csv.str());
  run.notes()["reference_power"] = rho_ref;
  run.notes()["failures"] = failures;
  if (!failures.empty()) {
    for (const auto& f : failures) run.diag() << "tolerance violated: " << f << '\n';
    return kValidationFailure;
  }
  return kOk;
}

/// Single-point Bussgang query (closed form, plus Monte-Carlo when mc_samples > 0).
inline int cmd_bussgang(Run& run, std::ostream& os) {
  const auto& cfg = run.config();
  if (!cfg.rho) throw ConfigError("bussgang: --rho is required");
  const OddPolynomial model = load_amplifier(cfg);
  const BussgangPoint p = bussgang(model, *cfg.rho);
  const double total = output_power(model, *cfg.rho);
  Csv csv{"rho", "g_re", "g_im", "c", "output_power", "g_mc_re", "g_mc_im", "c_mc", "g_stderr", "c_stderr"};
  std::vector<std::string> row{fmt(p.rho), fmt(p.gain.real()), fmt(p.gain.imag()), fmt(p.distortion_power),
                               fmt(total)};
  os << "rho " << fmt(p.rho) << "\ngain " << fmt(p.gain.real()) << ' ' << fmt(p.gain.imag())
     << "\ndistortion_power " << fmt(p.distortion_power) << "\noutput_power " << fmt(total) << '\n';
  if (cfg.mc_samples > 0) {
    const McEstimate e = estimate_bussgang(model, *cfg.rho, {cfg.mc_samples, cfg.seed, 0});
    for (const double v : {e.point.gain.real(), e.point.gain.imag(), e.point.distortion_power, e.gain_stderr,
                           e.distortion_stderr}) {
      row.push_back(fmt(v));
    }
    os << "mc_gain " << fmt(e.point.gain.real()) << ' ' << fmt(e.point.gain.imag()) << " +- " << fmt(e.gain_stderr)
       << "\nmc_distortion_power " << fmt(e.point.distortion_power) << " +- " << fmt(e.distortion_stderr) << '\n';
  } else {
    row.insert(row.end(), 5, "");
  }
  csv.row(row);
  run.write("bussgang.csv", csv.str());
  return kOk;
}

/// Runs one command end to end, mapping errors to exit codes, and always
/// writes the manifest once the output directory exists.
inline int run_command(const std::string& command, const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                       std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::optional<Run> run;
  int code = kOk;
  try {
    run.emplace(command, cfg, out_dir, err);
    if (command == "fit") code = cmd_fit(*run);
    else if (command == "opt-power") code = cmd_opt_power(*run);
    else if (command == "select") code = cmd_select(*run);
    else if (command == "mc-validate") code = cmd_mc_validate(*run);
    else if (command == "bussgang") code = cmd_bussgang(*run, out);
    else throw ConfigError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    code = kConfigError;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    code = kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << command << " failed: " << e.what() << '\n';
    code = kFailure;
  }
  if (run) {
    run->notes()["exit_message"] = code == kOk ? "ok" : "see stderr";
    run->finish(code);
  }
  return code;
}

}  // namespace lissel::cli

#endif  // LISSEL_CLI_RUNNER_HPP
