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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kvbeam/frequency_domain.hpp"
#include "kvbeam/model.hpp"
#include "kvbeam/time_domain.hpp"

namespace kvbeam {

inline constexpr const char* kVersion = "kvbeam 0.1.0";

// Decay order stated for a single active degenerate damping.
inline constexpr double kClaimedDecayOrder = 0.5;

// Acceptance windows used by the report verdict.
struct VerdictWindows {
  double decay_lo = 0.35;
  double decay_hi = 0.65;
  double beta_lo = 1.6;
  double beta_hi = 2.4;
  double bound_ratio_max = 5.0;
};

enum class ActiveSide { kNone, kShear, kBending, kBoth };

const char* active_side_name(ActiveSide side) noexcept;

struct Scenario {
  std::string name;
  BeamParameters params;
  ActiveSide side = ActiveSide::kBending;
  double damping_scale = 1.0;
  double damping_exponent = 0.5;
  int mesh_n = 128;
  double dt = 0.01;
  double t_end = 2000.0;
  int sample_every = 10;
  double omega_lo = 10.0;
  std::optional<double> omega_hi;  // defaults to the resolved maximum
  std::optional<int> sweep_points;  // defaults to 16 per decade
  std::string initial_data = "bump-left";
  std::uint64_t seed = 0;

  // Outside the single-damping, alpha < 1 setting: runs, but never judged.
  bool exploratory = false;

  DampingConfiguration damping() const;
};

struct ParsedConfig {
  std::vector<Scenario> scenarios;
  std::vector<std::string> warnings;
};

// Flat key-value document with one [scenario.NAME] section per scenario.
// Throws ErrorCode::kConfiguration with the offending line on any schema
// violation.
ParsedConfig parse_config(const std::string& text);
ParsedConfig parse_config_file(const std::filesystem::path& path);

// Names accepted by initial_data.
const std::vector<std::string>& initial_data_catalog();
ContinuousState make_initial_data(const std::string& name, std::uint64_t seed);

struct DecaySummary {
  bool fitted = false;
  std::string reason;  // why no fit, when !fitted
  DecayFit fit;
  NormalizedBound bound;
  // Diagnostic only: fit over the longest stable-slope region.
  std::optional<DecayFit> scaling_region;
};

struct SweepSummary {
  bool fitted = false;
  std::string reason;
  double beta = 0.0;
  double residual = 0.0;
  double fit_lo = 0.0;
  double fit_hi = 0.0;
  double resolved_omega_max = 0.0;
  BoundednessCertificate certificate;
};

struct SpectrumSummary {
  bool computed = false;
  std::string reason;
  double spectral_abscissa = 0.0;
  double imaginary_axis_clearance = 0.0;
  double spectral_radius = 0.0;
  std::size_t count = 0;
};

struct ScenarioResult {
  Scenario scenario;
  double alpha = 0.0;  // degeneracy index of the active profile
  double initial_graph_norm = 0.0;
  double energy_drift = 0.0;  // max |E(t)-E(0)|/E(0)
  DecaySummary decay;
  SweepSummary sweep;
  SpectrumSummary spectrum;
  std::string started;
  std::string finished;
};

struct RunOptions {
  int sweep_threads = 1;
};

// Executes the time- and frequency-domain analyses and, when out_dir is
// given, writes trajectory.csv, sweep.csv, spectrum.csv and result.txt into
// out_dir / scenario.name.
ScenarioResult run_scenario(const Scenario& s,
                            const std::optional<std::filesystem::path>& out_dir,
                            const RunOptions& options = {});

std::vector<ScenarioResult> run_scenarios(
    const std::vector<Scenario>& scenarios,
    const std::optional<std::filesystem::path>& out_dir, int jobs);

std::string verdict(const ScenarioResult& r, const VerdictWindows& w = {});

std::string table_report(const std::vector<ScenarioResult>& results,
                         const VerdictWindows& w = {});

// Rebuilds results from a run directory, refitting from the CSV files.
std::vector<ScenarioResult> load_results(const std::filesystem::path& dir);

// Writes decay.gp, resolvent.gp and spectrum.gp next to each result's CSVs.
std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& dir);

}  // namespace kvbeam
