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


#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "catch_amalgamated.hpp"
#include "lissel/cli/runner.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using lissel::cli::ExperimentConfig;
using lissel::cli::json;

namespace {

class TempDir {
 public:
  explicit TempDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("lissel_cli_" + std::to_string(::getpid()) + "_" + tag)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::string f;
    std::istringstream ls(line);
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(fields);
  }
  return rows;
}

int run(const std::string& cmd, const ExperimentConfig& cfg, const fs::path& dir) {
  std::ostringstream out, err;
  return lissel::cli::run_command(cmd, cfg, dir, out, err);
}

ExperimentConfig quick() {
  ExperimentConfig c;
  c.mc_samples = 20'000;
  c.n_panels_list = {6, 12};
  return c;
}

void check_csv_texture(const fs::path& p) {
  const std::string text = slurp(p);
  REQUIRE_FALSE(text.empty());
  CHECK(text.back() == '\n');
  CHECK(text.find('\r') == std::string::npos);
}

}  // namespace

TEST_CASE("configuration defaults and precedence", "[cli][config]") {
  TempDir tmp("config");
  const json defaults = lissel::cli::to_json(ExperimentConfig{});
  CHECK(defaults["backoffs_db"] == json({1.0, 4.0, 7.0}));
  CHECK(defaults["n_panels_list"] == json({10, 20, 30, 40, 50, 60, 70, 80, 90, 100}));
  CHECK(defaults["solvers"] == json({"oracle", "gain", "closedform2"}));
  CHECK(defaults["budget"] == 2'000'000);
  CHECK(defaults["ue_distance_lambda"] == 50.0);
  CHECK(defaults["backoff_db"] == 7.0);
  CHECK(defaults["snr_db"] == 10.0);
  CHECK(defaults["antennas_per_panel"] == 16);
  CHECK(defaults["panel_pitch_lambda"] == 5.0);

  const fs::path file = tmp.path() / "cfg.json";
  std::ofstream(file) << R"({"seed": 5, "snr_db": 3.0, "layout": "square-grid", "n_max": 4})";
  const auto from_file = lissel::cli::resolve_config(file, json::object());
  CHECK(from_file.seed == 5);
  CHECK(from_file.scene.snr_db == 3.0);
  CHECK(from_file.scene.layout == lissel::Layout::square_grid);
  CHECK(from_file.n_max == std::size_t{4});
  CHECK(from_file.threads == 1);

  const auto flags = lissel::cli::resolve_config(file, json{{"seed", 9}});
  CHECK(flags.seed == 9);
  CHECK(flags.scene.snr_db == 3.0);

  SECTION("round trip through JSON") {
    const auto back = lissel::cli::from_json(lissel::cli::to_json(from_file));
    CHECK(lissel::cli::to_json(back) == lissel::cli::to_json(from_file));
  }
  SECTION("unknown keys and bad values are configuration errors") {
    std::ofstream(tmp.path() / "bad.json") << R"({"sed": 5})";
    CHECK_THROWS_AS(lissel::cli::resolve_config(tmp.path() / "bad.json", json::object()), lissel::cli::ConfigError);
    std::ofstream(tmp.path() / "bad2.json") << R"({"seed": "five"})";
    CHECK_THROWS_AS(lissel::cli::resolve_config(tmp.path() / "bad2.json", json::object()), lissel::cli::ConfigError);
    std::ofstream(tmp.path() / "bad3.json") << "{ not json";
    CHECK_THROWS_AS(lissel::cli::resolve_config(tmp.path() / "bad3.json", json::object()), lissel::cli::ConfigError);
    CHECK_THROWS_AS(lissel::cli::resolve_config(tmp.path() / "missing.json", json::object()), lissel::cli::ConfigError);
    CHECK_THROWS_AS(lissel::cli::from_json(json{{"layout", "hex"}}), lissel::cli::ConfigError);
    CHECK_THROWS_AS(lissel::cli::from_json(json{{"solvers", {"annealing"}}}), lissel::cli::ConfigError);
    CHECK_THROWS_AS(lissel::cli::from_json(json{{"fit_weighting", "relative"}}), lissel::cli::ConfigError);
    CHECK_THROWS_AS(lissel::cli::from_json(json::array()), lissel::cli::ConfigError);
  }
}

TEST_CASE("number formatting", "[cli][format]") {
  CHECK(lissel::format_double(0.1) == "0.10000000000000001");
  CHECK(lissel::format_double(1.0) == "1");
  CHECK(lissel::format_double(-2.5e-300) == "-2.5e-300");
  CHECK(lissel::format_double(1.0 / 3.0) == "0.33333333333333331");
  CHECK(lissel::format_double(std::nan("")) == "nan");
  CHECK(lissel::format_double(-INFINITY) == "-inf");
  lissel::cli::Csv csv{"a", "b"};
  csv.row({"1", ""});
  CHECK(csv.str() == "a,b\n1,\n");
  CHECK(lissel::cli::boff_label(7.0) == "7");
  CHECK(lissel::cli::boff_label(2.5) == "2.5");
}

TEST_CASE("fit command", "[cli][fit]") {
  TempDir tmp("fit");
  REQUIRE(run("fit", quick(), tmp.path()) == lissel::cli::kOk);
  for (const char* b : {"1", "4", "7"}) {
    const fs::path csv = tmp.path() / (std::string("fig2_") + b + ".csv");
    check_csv_texture(csv);
    const auto rows = read_csv(csv);
    CHECK(rows.front() == std::vector<std::string>{"rho", "c_mlp", "c_exp"});
    CHECK(rows.size() == 33);
    std::ifstream rec(tmp.path() / (std::string("fig2_") + b + "_model.txt"));
    const auto r = lissel::read_exp_record(rec);
    CHECK(r.model.q > 2.0);
  }
  const json m = json::parse(slurp(tmp.path() / "manifest_fit.json"));
  CHECK(m["command"] == "fit");
  CHECK(m["version"] == lissel::cli::kToolVersion);
  CHECK(m["outputs"].size() == 6);
  CHECK(m["config"] == lissel::cli::to_json(quick()));
  CHECK(m["exit_code"] == 0);
  CHECK(m.contains("wall_clock_s"));
  for (const auto& f : m["notes"]["fits"]) CHECK(f["rmse_over_max_c"].get<double>() <= 0.10);

  SECTION("single back-off") {
    TempDir one("fit_one");
    auto c = quick();
    c.backoffs_db = {7.0};
    REQUIRE(run("fit", c, one.path()) == lissel::cli::kOk);
    CHECK(fs::exists(one.path() / "fig2_7.csv"));
    CHECK_FALSE(fs::exists(one.path() / "fig2_1.csv"));
  }
  SECTION("malformed amplifier fixture is a parse error") {
    TempDir bad("fit_bad");
    auto c = quick();
    c.amplifier = oracle::fixture_path("malformed.txt");
    std::ostringstream out, err;
    CHECK(lissel::cli::run_command("fit", c, bad.path(), out, err) == lissel::cli::kConfigError);
    CHECK(err.str().find("line 4") != std::string::npos);
  }
  SECTION("two-column sample input") {
    TempDir s("fit_samples");
    const fs::path in = s.path() / "samples.csv";
    {
      std::ofstream f(in);
      f << "rho,C\n";
      for (const double r : lissel::numeric::log_grid(1e-2, 10.0, 32)) {
        f << lissel::format_double(r) << ',' << lissel::format_double(lissel::eval_exp({1e-3, 4.0}, r)) << '\n';
      }
    }
    auto c = quick();
    c.samples_csv = in.string();
    REQUIRE(run("fit", c, s.path()) == lissel::cli::kOk);
    std::ifstream rec(s.path() / "fit_samples_model.txt");
    const auto r = lissel::read_exp_record(rec);
    CHECK(std::abs(r.model.q - 4.0) < 0.04);
    CHECK(read_csv(s.path() / "fit_samples.csv").size() == 33);
  }
}

TEST_CASE("opt-power command", "[cli][opt]") {
  TempDir tmp("opt");
  REQUIRE(run("opt-power", quick(), tmp.path()) == lissel::cli::kOk);
  const auto rows = read_csv(tmp.path() / "fig3.csv");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"boff", "rho_numeric", "rho_opt1", "rho_opt2", "sqerr1", "sqerr2"});
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][5]) <= std::stod(rows[i][4]));
  const json m = json::parse(slurp(tmp.path() / "manifest_opt-power.json"));
  CHECK(m["notes"]["mse_opt2"].get<double>() <= m["notes"]["mse_opt1"].get<double>());
  CHECK(m["notes"]["fixtures"][0]["model_source"] == "fitted");

  SECTION("uses model records written by fit") {
    REQUIRE(run("fit", quick(), tmp.path()) == lissel::cli::kOk);
    const std::string before = slurp(tmp.path() / "fig3.csv");
    REQUIRE(run("opt-power", quick(), tmp.path()) == lissel::cli::kOk);
    CHECK(slurp(tmp.path() / "fig3.csv") == before);
    const json m2 = json::parse(slurp(tmp.path() / "manifest_opt-power.json"));
    CHECK(m2["notes"]["fixtures"][0]["model_source"] == "fig2_1_model.txt");
  }
  SECTION("noise override recomputes the optima") {
    auto c = quick();
    c.sigma2 = 0.05;
    TempDir o("opt_sigma");
    REQUIRE(run("opt-power", c, o.path()) == lissel::cli::kOk);
    const auto r2 = read_csv(o.path() / "fig3.csv");
    CHECK(r2[1][1] != rows[1][1]);
  }
  SECTION("invalid closed form becomes an empty cell") {
    auto c = quick();
    c.sigma2 = 100.0;
    TempDir o("opt_domain");
    REQUIRE(run("opt-power", c, o.path()) == lissel::cli::kOk);
    const auto r2 = read_csv(o.path() / "fig3.csv");
    CHECK(r2[1][2].empty());
    CHECK(r2[1][4].empty());
    CHECK_FALSE(r2[1][3].empty());
  }
}

TEST_CASE("select command", "[cli][select]") {
  TempDir tmp("select");
  REQUIRE(run("select", quick(), tmp.path()) == lissel::cli::kOk);
  const auto rows = read_csv(tmp.path() / "fig4.csv");
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] == std::vector<std::string>{"n_panels", "solver", "sndr", "se", "n_selected"});
  CHECK(rows[1][1] == "exhaustive");
  CHECK(rows[2][1] == "gain");
  CHECK(rows[3][1] == "closedform2");
  for (std::size_t i = 1; i < rows.size(); i += 3) {
    CHECK(std::stod(rows[i][3]) >= std::stod(rows[i + 1][3]));
    CHECK(std::stod(rows[i][3]) >= std::stod(rows[i + 2][3]));
  }
  const json m = json::parse(slurp(tmp.path() / "manifest_select.json"));
  CHECK(m["notes"]["sweep"][0]["solvers"]["oracle"]["solver"] == "exhaustive");

  SECTION("oracle falls back to local search beyond the budget") {
    auto c = quick();
    c.budget = 3;
    TempDir o("select_budget");
    REQUIRE(run("select", c, o.path()) == lissel::cli::kOk);
    CHECK(read_csv(o.path() / "fig4.csv")[1][1] == "local");
  }
  SECTION("full selection makes every solver tie") {
    auto c = quick();
    c.n_panels_list = {10};
    c.n_max = 10;
    c.solvers = {"exhaustive", "local", "gain", "closedform1", "closedform2"};
    TempDir o("select_full");
    REQUIRE(run("select", c, o.path()) == lissel::cli::kOk);
    const auto r = read_csv(o.path() / "fig4.csv");
    REQUIRE(r.size() == 6);
    for (std::size_t i = 2; i < r.size(); ++i) {
      CHECK(r[i][2] == r[1][2]);
      CHECK(r[i][4] == "10");
    }
  }
  SECTION("single solver") {
    auto c = quick();
    c.solvers = {"gain"};
    TempDir o("select_gain");
    REQUIRE(run("select", c, o.path()) == lissel::cli::kOk);
    const auto r = read_csv(o.path() / "fig4.csv");
    CHECK(r.size() == 3);
    for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i][1] == "gain");
  }
  SECTION("invalid selection size") {
    auto c = quick();
    c.n_max = 7;
    TempDir o("select_bad");
    CHECK(run("select", c, o.path()) == lissel::cli::kConfigError);
  }
}

TEST_CASE("mc-validate command", "[cli][mc]") {
  SECTION("identity model has zero errors") {
    TempDir tmp("mc_identity");
    auto c = quick();
    c.amplifier = "identity";
    REQUIRE(run("mc-validate", c, tmp.path()) == lissel::cli::kOk);
    const auto rows = read_csv(tmp.path() / "bussgang_check.csv");
    REQUIRE(rows.size() == 25);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(std::stod(rows[i][4]) == 0.0);
      CHECK(std::stod(rows[i][8]) == 0.0);
      CHECK(rows[i].back() == "1");
    }
  }
  SECTION("too few samples is a precondition failure") {
    TempDir tmp("mc_small");
    auto c = quick();
    c.mc_samples = 1000;
    std::ostringstream out, err;
    CHECK(lissel::cli::run_command("mc-validate", c, tmp.path(), out, err) == lissel::cli::kConfigError);
    CHECK(err.str().find("below the minimum") != std::string::npos);
  }
  SECTION("tolerance violations exit with the validation code and name the row") {
    TempDir tmp("mc_strict");
    auto c = quick();
    c.mc_gain_tol = 1e-9;
    std::ostringstream out, err;
    CHECK(lissel::cli::run_command("mc-validate", c, tmp.path(), out, err) == lissel::cli::kValidationFailure);
    CHECK(err.str().find("tolerance violated: 1,") != std::string::npos);
    CHECK(fs::exists(tmp.path() / "bussgang_check.csv"));
    const json m = json::parse(slurp(tmp.path() / "manifest_mc-validate.json"));
    CHECK(m["exit_code"] == 3);
  }
}

TEST_CASE("bussgang command", "[cli][bussgang]") {
  TempDir tmp("bussgang");
  auto c = quick();
  c.amplifier = oracle::fixture_path("hand_cubic.txt");
  c.rho = 0.5;
  std::ostringstream out, err;
  REQUIRE(lissel::cli::run_command("bussgang", c, tmp.path(), out, err) == lissel::cli::kOk);
  CHECK(out.str().find("distortion_power 0.0025") != std::string::npos);
  const auto rows = read_csv(tmp.path() / "bussgang.csv");
  REQUIRE(rows.size() == 2);
  CHECK(std::abs(std::stod(rows[1][1]) - 0.9) < 1e-15);
  CHECK(std::abs(std::stod(rows[1][3]) - 0.0025) < 1e-15);
  CHECK(std::abs(std::stod(rows[1][4]) - 0.4075) < 1e-15);

  c.rho.reset();
  CHECK(run("bussgang", c, tmp.path()) == lissel::cli::kConfigError);
  c.rho = -1.0;
  CHECK(run("bussgang", c, tmp.path()) == lissel::cli::kFailure);
  c.rho = 0.5;
  CHECK(run("nonsense", c, tmp.path()) == lissel::cli::kConfigError);
}

TEST_CASE("reruns from a manifest are byte-identical", "[cli][determinism]") {
  for (const char* cmd : {"fit", "opt-power", "select", "mc-validate", "bussgang"}) {
    TempDir a(std::string("det_a_") + cmd), b(std::string("det_b_") + cmd);
    auto c = quick();
    c.rho = 1.0;
    c.seed = 77;
    const int first = run(cmd, c, a.path());
    const fs::path manifest = a.path() / ("manifest_" + std::string(cmd) + ".json");
    const auto again = lissel::cli::resolve_config(manifest, json::object());
    CHECK(run(cmd, again, b.path()) == first);
    const json m = json::parse(slurp(manifest));
    REQUIRE_FALSE(m["outputs"].empty());
    for (const auto& out : m["outputs"]) {
      const auto name = out.get<std::string>();
      CHECK(slurp(a.path() / name) == slurp(b.path() / name));
    }
  }
}

#ifdef LISSEL_CLI_PATH
TEST_CASE("command-line front end exit codes", "[cli][binary]") {
  TempDir tmp("binary");
  const std::string bin = LISSEL_CLI_PATH;
  const std::string out = " --out-dir " + tmp.path().string() + " ";
  auto sh = [](const std::string& cmd) {
    const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  CHECK(sh(bin + out + "bussgang --rho 0.5 --samples 0") == 0);
  CHECK(fs::exists(tmp.path() / "bussgang.csv"));
  CHECK(sh(bin + out + "bussgang") == 2);
  CHECK(sh(bin + out + "--bogus bussgang --rho 1") == 2);
  CHECK(sh(bin + out + "--seed -3 bussgang --rho 1") == 2);
  CHECK(sh(bin + out + "--threads 0 fit") == 2);
  CHECK(sh(bin + out) == 2);
  std::ofstream(tmp.path() / "bad.json") << R"({"unknown_key": 1})";
  CHECK(sh(bin + out + "--config " + (tmp.path() / "bad.json").string() + " fit") == 2);
  CHECK(sh(bin + out + "--amplifier " + oracle::fixture_path("malformed.txt") + " fit") == 2);
  CHECK(sh(bin + out + "mc-validate --samples 1000") == 2);
  CHECK(sh(bin + out + "--seed 4 --threads 2 fit --boff 4") == 0);
  CHECK(fs::exists(tmp.path() / "fig2_4.csv"));
  const json m = json::parse(slurp(tmp.path() / "manifest_fit.json"));
  CHECK(m["config"]["seed"] == 4);
  CHECK(m["config"]["threads"] == 2);
  CHECK(sh(bin + " --help") == 0);
}
#endif
