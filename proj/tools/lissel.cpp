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


// lissel command-line front end: `lissel [global options] <command> [options]`.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lissel/cli/runner.hpp"

namespace {

using lissel::cli::json;

template <typename T>
void set_if(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lissel: large-intelligent-surface panel selection under amplifier nonlinearity"};
  app.require_subcommand(1);
  app.set_version_flag("--version", lissel::cli::kToolVersion);

  std::optional<std::string> config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> amplifier;
  std::optional<double> saturation;
  std::optional<double> snr_db;
  app.add_option("--config", config_path, "JSON config file or a run manifest");
  app.add_option("--out-dir", out_dir, "Directory for CSV outputs and the manifest")->capture_default_str();
  app.add_option("--seed", seed, "Master seed (u64)");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--amplifier", amplifier, "standin | identity | polynomial fixture path");
  app.add_option("--saturation-power", saturation, "Stand-in saturation input power");
  app.add_option("--snr", snr_db, "SNR in dB at the LIS center / per back-off fixture");

  std::vector<double> boffs;
  std::optional<std::string> samples_csv;
  auto* fit = app.add_subcommand("fit", "Fit the EXP distortion surrogate per back-off");
  fit->add_option("--boff", boffs, "Back-off values in dB");
  fit->add_option("--samples", samples_csv, "Fit a two-column CSV (rho,C) instead of the amplifier sweep");
  fit->fallthrough();

  std::optional<double> sigma2;
  std::optional<double> rho_max;
  auto* opt = app.add_subcommand("opt-power", "Compare the numeric power optimum with both closed forms");
  opt->add_option("--boff", boffs, "Back-off values in dB");
  opt->add_option("--sigma2", sigma2, "Noise variance override");
  opt->add_option("--rho-max", rho_max, "Upper power bound override");
  opt->fallthrough();

  std::vector<std::size_t> n_panels;
  std::optional<std::size_t> n_max;
  std::vector<std::string> solvers;
  std::optional<std::string> layout;
  std::optional<std::string> normalization;
  std::optional<std::size_t> budget;
  std::optional<double> sel_boff;
  std::optional<double> offset;
  auto* sel = app.add_subcommand("select", "Panel-selection sweep over the number of panels");
  sel->add_option("--n-panels", n_panels, "Panel counts to sweep");
  sel->add_option("--nmax", n_max, "Maximum number of selected panels");
  sel->add_option("--solver", solvers, "oracle | exhaustive | local | gain | closedform1 | closedform2");
  sel->add_option("--layout", layout, "linear | square-grid");
  sel->add_option("--normalization", normalization, "selected | literal");
  sel->add_option("--budget", budget, "Exhaustive enumeration budget (subset evaluations)");
  sel->add_option("--boff", sel_boff, "Back-off in dB");
  sel->add_option("--ue-offset", offset, "UE offset along the array in wavelengths");
  sel->fallthrough();

  std::optional<std::size_t> mc_samples;
  std::optional<std::size_t> mc_points;
  auto* mc = app.add_subcommand("mc-validate", "Cross-check Bussgang closed forms against Monte-Carlo");
  mc->add_option("--boff", boffs, "Back-off values in dB");
  mc->add_option("--samples", mc_samples, "Monte-Carlo samples per point");
  mc->add_option("--points", mc_points, "Grid points per back-off");
  mc->fallthrough();

  std::optional<double> rho;
  auto* bg = app.add_subcommand("bussgang", "Single-point Bussgang gain and distortion power");
  bg->add_option("--rho", rho, "Input power (required unless set by --config)");
  bg->add_option("--samples", mc_samples, "Monte-Carlo samples (0 disables)");
  bg->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return lissel::cli::kConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  json overrides = json::object();
  set_if(overrides, "seed", seed);
  set_if(overrides, "threads", threads);
  set_if(overrides, "amplifier", amplifier);
  set_if(overrides, "saturation_power", saturation);
  set_if(overrides, "snr_db", snr_db);
  if (!boffs.empty()) overrides["backoffs_db"] = boffs;
  if (command == "fit") set_if(overrides, "samples_csv", samples_csv);
  set_if(overrides, "sigma2", sigma2);
  set_if(overrides, "rho_max", rho_max);
  if (!n_panels.empty()) overrides["n_panels_list"] = n_panels;
  set_if(overrides, "n_max", n_max);
  if (!solvers.empty()) overrides["solvers"] = solvers;
  set_if(overrides, "layout", layout);
  set_if(overrides, "normalization", normalization);
  set_if(overrides, "budget", budget);
  set_if(overrides, "backoff_db", sel_boff);
  set_if(overrides, "ue_offset_lambda", offset);
  set_if(overrides, "mc_samples", mc_samples);
  set_if(overrides, "mc_points", mc_points);
  set_if(overrides, "rho", rho);

  lissel::cli::ExperimentConfig cfg;
  try {
    std::optional<std::filesystem::path> file;
    if (config_path) file = *config_path;
    cfg = lissel::cli::resolve_config(file, overrides);
  } catch (const lissel::cli::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return lissel::cli::kConfigError;
  }
  return lissel::cli::run_command(command, cfg, out_dir);
}
