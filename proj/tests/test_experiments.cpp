// Copyright 2026 The kvbeam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "kvbeam/error.hpp"
#include "kvbeam/experiments.hpp"

using namespace kvbeam;
namespace fs = std::filesystem;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfiguration);
    return e.what();
  }
  FAIL("expected a configuration error");
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kvbeam_test_" + name);
  fs::remove_all(p);
  return p;
}

Scenario small(const std::string& name, ActiveSide side) {
  Scenario s;
  s.name = name;
  s.side = side;
  s.mesh_n = 16;
  s.dt = 0.02;
  s.t_end = 60.0;
  s.sample_every = 5;
  s.omega_lo = 2.0;
  return s;
}

}  // namespace

TEST_CASE("config defaults and overrides") {
  const auto cfg = parse_config(
      "# comment\n"
      "[scenario.a]\n"
      "[scenario.b]\n"
      "damping_side = shear   # trailing comment\n"
      "mesh_n = 32\n"
      "rho1 = 2.5\n"
      "omega_hi = 40\n"
      "initial_data = random-smooth\n"
      "seed = 9\n");
  REQUIRE(cfg.scenarios.size() == 2);
  const Scenario& a = cfg.scenarios[0];
  CHECK(a.name == "a");
  CHECK(a.side == ActiveSide::kBending);
  CHECK(a.mesh_n == 128);
  CHECK(a.damping_exponent == 0.5);
  CHECK(a.initial_data == "bump-left");
  CHECK_FALSE(a.omega_hi.has_value());
  CHECK_FALSE(a.exploratory);
  const Scenario& b = cfg.scenarios[1];
  CHECK(b.side == ActiveSide::kShear);
  CHECK(b.mesh_n == 32);
  CHECK(b.params.rho1 == 2.5);
  CHECK(*b.omega_hi == 40.0);
  CHECK(b.seed == 9u);
  CHECK(cfg.warnings.empty());
}

TEST_CASE("config marks scenarios outside the hypotheses as exploratory") {
  const auto cfg = parse_config(
      "[scenario.x]\ndamping_exponent = 1\n"
      "[scenario.y]\ndamping_side = both\n"
      "[scenario.z]\ndamping_side = none\n"
      "[scenario.ok]\ndamping_exponent = 0\n");
  CHECK(cfg.scenarios[0].exploratory);
  CHECK(cfg.scenarios[1].exploratory);
  CHECK(cfg.scenarios[2].exploratory);
  CHECK_FALSE(cfg.scenarios[3].exploratory);
  CHECK(cfg.warnings.size() == 3);
}

TEST_CASE("config schema violations name the line") {
  CHECK(config_error("[scenario.a]\nbogus = 1\n").find("line 2") != std::string::npos);
  CHECK(config_error("[scenario.a]\n[scenario.a]\n").find("line 2") != std::string::npos);
  CHECK(config_error("mesh_n = 8\n").find("line 1") != std::string::npos);
  CHECK(config_error("[scenario.a]\nmesh_n = 8\nmesh_n = 8\n").find("line 3") !=
        std::string::npos);
  CHECK(config_error("[other]\n").find("line 1") != std::string::npos);
  CHECK(config_error("[scenario.a]\nmesh_n = 7\n").find("line 2") != std::string::npos);
  CHECK(config_error("[scenario.a]\nmesh_n = 2\n").find("line 2") != std::string::npos);
  CHECK(config_error("[scenario.a]\ndt = -1\n").find("line 2") != std::string::npos);
  CHECK(config_error("[scenario.a]\nrho2 = abc\n").find("line 2") != std::string::npos);
  CHECK(config_error("[scenario.a]\ninitial_data = square\n").find("line 2") !=
        std::string::npos);
  CHECK(config_error("[scenario.a]\ndamping_side = left\n").find("line 2") !=
        std::string::npos);
  CHECK(config_error("[scenario.a]\nsweep_points = 4\n").find("line 2") !=
        std::string::npos);
  CHECK(config_error("[scenario.a]\nomega_lo = 50\nomega_hi = 5\n").find("line 3") !=
        std::string::npos);
  CHECK(config_error("[scenario.bad name]\n").find("line 1") != std::string::npos);
  config_error("# nothing\n");
}

TEST_CASE("shipped configs parse") {
  for (const char* name : {"single_damping.ini", "exploratory.ini", "quick.ini"}) {
    const auto cfg = parse_config_file(fs::path(KVBEAM_SOURCE_DIR) / "configs" / name);
    CHECK_FALSE(cfg.scenarios.empty());
  }
  const auto regime =
      parse_config_file(fs::path(KVBEAM_SOURCE_DIR) / "configs" / "single_damping.ini");
  for (const auto& s : regime.scenarios) CHECK_FALSE(s.exploratory);
  try {
    parse_config_file("/nonexistent/kvbeam.ini");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
  }
}

TEST_CASE("initial data catalog") {
  for (const auto& name : initial_data_catalog()) {
    const auto u = make_initial_data(name, 3);
    // Clamped ends.
    for (const Field* f : {&u.w, &u.phi, &u.v, &u.psi}) {
      CHECK(std::abs(f->value(-1.0)) < 1e-12);
      CHECK(std::abs(f->value(1.0)) < 1e-12);
    }
  }
  const auto r1 = make_initial_data("random-smooth", 42);
  const auto r2 = make_initial_data("random-smooth", 42);
  const auto r3 = make_initial_data("random-smooth", 43);
  for (double x : {-0.7, 0.1, 0.55}) {
    CHECK(r1.w.value(x) == r2.w.value(x));
    CHECK(r1.psi.derivative(x) == r2.psi.derivative(x));
  }
  CHECK(r1.w.value(0.3) != r3.w.value(0.3));
  // The bump is supported in the undamped half.
  const auto b = make_initial_data("bump-left", 0);
  CHECK(b.w.value(0.2) == 0.0);
  CHECK(b.w.value(-0.5) > 0.0);
  try {
    make_initial_data("square", 0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfiguration);
  }
}

TEST_CASE("scenario run produces consistent artifacts") {
  const fs::path dir = scratch("run");
  Scenario s = small("bend", ActiveSide::kBending);
  const auto r = run_scenario(s, dir);
  CHECK(r.alpha == doctest::Approx(0.5));
  CHECK(r.initial_graph_norm > 0.0);
  CHECK(r.energy_drift > 0.0);
  CHECK(r.energy_drift <= 1.0);
  CHECK(r.sweep.fitted);
  CHECK(r.spectrum.computed);
  CHECK(r.spectrum.spectral_abscissa < 0.0);
  CHECK(r.spectrum.count == 4u * 15u);
  for (const char* f : {"trajectory.csv", "sweep.csv", "spectrum.csv", "result.txt"}) {
    CHECK(fs::exists(dir / "bend" / f));
    CHECK_FALSE(fs::exists(dir / "bend" / (std::string(f) + ".tmp")));
  }

  // Deterministic output.
  const fs::path dir2 = scratch("run2");
  run_scenario(s, dir2);
  for (const char* f : {"trajectory.csv", "sweep.csv", "spectrum.csv"}) {
    CHECK(slurp(dir / "bend" / f) == slurp(dir2 / "bend" / f));
  }

  // Reloading refits the same numbers from the files.
  const auto loaded = load_results(dir);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].scenario.name == "bend");
  CHECK(loaded[0].alpha == doctest::Approx(r.alpha));
  CHECK(loaded[0].decay.fitted == r.decay.fitted);
  if (r.decay.fitted) {
    CHECK(loaded[0].decay.fit.exponent == doctest::Approx(r.decay.fit.exponent).epsilon(1e-9));
  }
  CHECK(loaded[0].sweep.beta == doctest::Approx(r.sweep.beta).epsilon(1e-9));
  CHECK(loaded[0].spectrum.spectral_abscissa ==
        doctest::Approx(r.spectrum.spectral_abscissa).epsilon(1e-12));

  const auto plots = emit_plots(dir);
  CHECK(plots.size() == 3);
  const std::string first = slurp(plots[0]);
  emit_plots(dir);
  CHECK(slurp(plots[0]) == first);
  fs::remove(dir / "bend" / "sweep.csv");
  CHECK_THROWS_AS(emit_plots(dir), Error);
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("degenerate scenarios are reported, not fitted") {
  Scenario none = small("none", ActiveSide::kNone);
  none.exploratory = true;
  const auto rn = run_scenario(none, std::nullopt);
  CHECK_FALSE(rn.decay.fitted);
  CHECK(rn.decay.reason == "conservative");
  CHECK(rn.energy_drift < 1e-8);
  CHECK(rn.spectrum.computed);
  CHECK(verdict(rn) == "outside the single-damping alpha<1 hypotheses - no claim");
}

TEST_CASE("verdict and table") {
  ScenarioResult r;
  r.scenario = small("s", ActiveSide::kShear);
  r.alpha = 0.5;
  CHECK(verdict(r) == "inconclusive (window policy)");
  r.decay.fitted = true;
  r.decay.fit.exponent = 0.5;
  r.decay.bound.ratio = 2.0;
  r.sweep.fitted = true;
  r.sweep.beta = 2.0;
  CHECK(verdict(r) == "consistent with t^-1/2");
  r.sweep.beta = 1.2;
  CHECK(verdict(r) == "not consistent with t^-1/2");
  r.sweep.beta = 2.0;
  r.decay.fit.exponent = 0.9;
  CHECK(verdict(r) == "not consistent with t^-1/2");
  r.decay.fit.exponent = 0.5;
  r.decay.bound.ratio = 9.0;
  CHECK(verdict(r) == "not consistent with t^-1/2");
  r.decay.bound.ratio = 2.0;

  ScenarioResult x = r;
  x.scenario.name = "x";
  x.scenario.exploratory = true;
  const std::string table = table_report({r, x});
  CHECK(table.find("claim=0.5") != std::string::npos);
  CHECK(table.find("Regime summary") != std::string::npos);
  CHECK(table.find("D2=0, D1 degenerate, alpha<1") != std::string::npos);
  CHECK(table.find("1/1 consistent") != std::string::npos);
  CHECK(table.find("no claim") != std::string::npos);
}

TEST_CASE("parallel runs match serial runs") {
  std::vector<Scenario> list = {small("p1", ActiveSide::kShear),
                                small("p2", ActiveSide::kBending)};
  const auto serial = run_scenarios(list, std::nullopt, 1);
  const auto parallel = run_scenarios(list, std::nullopt, 2);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].scenario.name == parallel[i].scenario.name);
    CHECK(serial[i].sweep.beta == parallel[i].sweep.beta);
    CHECK(serial[i].energy_drift == parallel[i].energy_drift);
  }
  Scenario broken = small("broken", ActiveSide::kBending);
  broken.damping_exponent = 1.5;  // hypotheses enforced: assembly rejects it
  list.push_back(broken);
  try {
    run_scenarios(list, std::nullopt, 2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("scenario broken") != std::string::npos);
  }
}
