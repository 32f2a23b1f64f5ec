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

#include "kvbeam/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "kvbeam/error.hpp"

namespace kvbeam {

namespace fs = std::filesystem;

const char* active_side_name(ActiveSide side) noexcept {
  switch (side) {
    case ActiveSide::kNone: return "none";
    case ActiveSide::kShear: return "shear";
    case ActiveSide::kBending: return "bending";
    case ActiveSide::kBoth: return "both";
  }
  return "none";
}

DampingConfiguration Scenario::damping() const {
  DampingConfiguration d;
  if (side == ActiveSide::kShear || side == ActiveSide::kBoth) {
    d.shear = DampingProfile::power_law(DampingSide::kShear, damping_scale,
                                        damping_exponent);
  }
  if (side == ActiveSide::kBending || side == ActiveSide::kBoth) {
    d.bending = DampingProfile::power_law(DampingSide::kBending, damping_scale,
                                          damping_exponent);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Config

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void config_error(int line, const std::string& msg) {
  throw Error(ErrorCode::kConfiguration,
              "line " + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& v, int line, const std::string& key) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || !std::isfinite(x)) {
    config_error(line, key + " expects a number, got '" + v + "'");
  }
  return x;
}

long long parse_int(const std::string& v, int line, const std::string& key) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size()) {
    config_error(line, key + " expects an integer, got '" + v + "'");
  }
  return x;
}

bool valid_name(const std::string& n) {
  if (n.empty()) return false;
  return std::all_of(n.begin(), n.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

void positive(double v, int line, const std::string& key) {
  if (!(v > 0.0)) config_error(line, key + " must be positive");
}

}  // namespace

ParsedConfig parse_config(const std::string& text) {
  ParsedConfig out;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  Scenario* current = nullptr;
  std::set<std::string> seen_keys;
  std::set<std::string> names;
  std::map<std::string, int> key_line;
  std::vector<std::map<std::string, int>> section_keys;

  const std::set<std::string> known = {
      "rho1",          "rho2",         "kappa1",       "kappa2",
      "damping_side",  "damping_scale", "damping_exponent", "mesh_n",
      "dt",            "t_end",        "sample_every", "omega_lo",
      "omega_hi",      "sweep_points", "initial_data", "seed"};

  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') config_error(lineno, "unterminated section header");
      const std::string header = trim(line.substr(1, line.size() - 2));
      const std::string prefix = "scenario.";
      if (header.rfind(prefix, 0) != 0) {
        config_error(lineno, "unknown section [" + header + "]");
      }
      const std::string name = header.substr(prefix.size());
      if (!valid_name(name)) {
        config_error(lineno, "scenario name '" + name +
                                 "' must use letters, digits, '_' or '-'");
      }
      if (!names.insert(name).second) {
        config_error(lineno, "duplicate scenario name '" + name + "'");
      }
      out.scenarios.emplace_back();
      current = &out.scenarios.back();
      current->name = name;
      section_keys.emplace_back();
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) config_error(lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!current) config_error(lineno, "key '" + key + "' outside a scenario");
    if (!known.count(key)) {
      config_error(lineno, "unknown key '" + key + "' in [scenario." +
                               current->name + "]");
    }
    if (value.empty()) config_error(lineno, "empty value for '" + key + "'");
    if (!section_keys.back().emplace(key, lineno).second) {
      config_error(lineno, "duplicate key '" + key + "'");
    }

    Scenario& s = *current;
    if (key == "rho1") {
      s.params.rho1 = parse_double(value, lineno, key);
      positive(s.params.rho1, lineno, key);
    } else if (key == "rho2") {
      s.params.rho2 = parse_double(value, lineno, key);
      positive(s.params.rho2, lineno, key);
    } else if (key == "kappa1") {
      s.params.kappa1 = parse_double(value, lineno, key);
      positive(s.params.kappa1, lineno, key);
    } else if (key == "kappa2") {
      s.params.kappa2 = parse_double(value, lineno, key);
      positive(s.params.kappa2, lineno, key);
    } else if (key == "damping_side") {
      if (value == "shear") {
        s.side = ActiveSide::kShear;
      } else if (value == "bending") {
        s.side = ActiveSide::kBending;
      } else if (value == "none") {
        s.side = ActiveSide::kNone;
      } else if (value == "both") {
        s.side = ActiveSide::kBoth;
      } else {
        config_error(lineno, "damping_side must be shear, bending, none or both");
      }
    } else if (key == "damping_scale") {
      s.damping_scale = parse_double(value, lineno, key);
      positive(s.damping_scale, lineno, key);
    } else if (key == "damping_exponent") {
      s.damping_exponent = parse_double(value, lineno, key);
      if (s.damping_exponent < 0.0) {
        config_error(lineno, "damping_exponent must be >= 0");
      }
    } else if (key == "mesh_n") {
      const long long n = parse_int(value, lineno, key);
      if (n < 4 || n % 2 != 0 || n > 100000) {
        config_error(lineno, "mesh_n must be an even integer >= 4");
      }
      s.mesh_n = static_cast<int>(n);
    } else if (key == "dt") {
      s.dt = parse_double(value, lineno, key);
      positive(s.dt, lineno, key);
    } else if (key == "t_end") {
      s.t_end = parse_double(value, lineno, key);
      positive(s.t_end, lineno, key);
    } else if (key == "sample_every") {
      const long long n = parse_int(value, lineno, key);
      if (n < 1 || n > 1000000000) config_error(lineno, "sample_every must be >= 1");
      s.sample_every = static_cast<int>(n);
    } else if (key == "omega_lo") {
      s.omega_lo = parse_double(value, lineno, key);
      positive(s.omega_lo, lineno, key);
    } else if (key == "omega_hi") {
      s.omega_hi = parse_double(value, lineno, key);
      positive(*s.omega_hi, lineno, key);
    } else if (key == "sweep_points") {
      const long long n = parse_int(value, lineno, key);
      if (n < 8 || n > 100000) config_error(lineno, "sweep_points must be >= 8");
      s.sweep_points = static_cast<int>(n);
    } else if (key == "initial_data") {
      const auto& cat = initial_data_catalog();
      if (std::find(cat.begin(), cat.end(), value) == cat.end()) {
        config_error(lineno, "initial_data '" + value + "' is not in the catalog");
      }
      s.initial_data = value;
    } else if (key == "seed") {
      const long long n = parse_int(value, lineno, key);
      if (n < 0) config_error(lineno, "seed must be non-negative");
      s.seed = static_cast<std::uint64_t>(n);
    }
  }

  for (std::size_t i = 0; i < out.scenarios.size(); ++i) {
    Scenario& s = out.scenarios[i];
    const auto& keys = section_keys[i];
    const int line = keys.count("omega_hi") ? keys.at("omega_hi") : 0;
    if (s.omega_hi && !(*s.omega_hi > s.omega_lo)) {
      config_error(line, "omega_hi must exceed omega_lo");
    }
    if (s.dt > s.t_end) {
      config_error(keys.count("dt") ? keys.at("dt") : 0, "dt exceeds t_end");
    }
    if (s.side == ActiveSide::kNone || s.side == ActiveSide::kBoth) {
      s.exploratory = true;
      out.warnings.push_back("scenario " + s.name + ": damping_side=" +
                             active_side_name(s.side) +
                             " is outside the single-damping setting; exploratory");
    }
    if (s.side != ActiveSide::kNone && s.damping_exponent >= 1.0) {
      s.exploratory = true;
      out.warnings.push_back("scenario " + s.name + ": damping_exponent " +
                             std::to_string(s.damping_exponent) +
                             " violates alpha < 1; exploratory");
    }
  }
  if (out.scenarios.empty()) {
    throw Error(ErrorCode::kConfiguration, "config defines no scenarios");
  }
  return out;
}

ParsedConfig parse_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Initial data

const std::vector<std::string>& initial_data_catalog() {
  static const std::vector<std::string> names = {"mode1", "mode1-mixed",
                                                 "bump-left", "random-smooth"};
  return names;
}

namespace {

constexpr double kPi = std::numbers::pi;

// C-infinity bump supported on (-0.9, -0.1).
double bump(double x) {
  const double s = (x + 0.5) / 0.4;
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - s * s));
}

double bump_derivative(double x) {
  const double s = (x + 0.5) / 0.4;
  if (std::abs(s) >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  return std::exp(-1.0 / q) * (-2.0 * s / (q * q)) / 0.4;
}

// Sum of a_k sin(k pi (x+1)/2), k = 1..K, which vanishes at x = +-1.
Field sine_series(std::vector<double> a) {
  auto value = [a](double x) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      s += a[k] * std::sin((k + 1) * kPi * (x + 1.0) / 2.0);
    }
    return s;
  };
  auto derivative = [a](double x) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double f = (k + 1) * kPi / 2.0;
      s += a[k] * f * std::cos(f * (x + 1.0));
    }
    return s;
  };
  return Field{value, derivative};
}

}  // namespace

ContinuousState make_initial_data(const std::string& name, std::uint64_t seed) {
  ContinuousState s;
  const Field mode1{[](double x) { return std::sin(kPi * x); },
                    [](double x) { return kPi * std::cos(kPi * x); }};
  if (name == "mode1") {
    s.w = mode1;
  } else if (name == "mode1-mixed") {
    s.w = mode1;
    s.phi = Field{[](double x) { return std::sin(kPi * x) * (1.0 - x * x); },
                  [](double x) {
                    return kPi * std::cos(kPi * x) * (1.0 - x * x) -
                           2.0 * x * std::sin(kPi * x);
                  }};
  } else if (name == "bump-left") {
    s.w = Field{bump, bump_derivative};
    s.phi = Field{bump, bump_derivative};
  } else if (name == "random-smooth") {
    std::uint64_t state = seed * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull;
    auto uniform = [&state]() {
      // splitmix64
      std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
      z ^= z >> 31;
      return static_cast<double>(z >> 11) * 0x1.0p-53;
    };
    Field* fields[] = {&s.w, &s.phi, &s.v, &s.psi};
    for (Field* f : fields) {
      const int modes = 1 + static_cast<int>(uniform() * 6.0);
      std::vector<double> a(std::min(modes, 6));
      for (std::size_t k = 0; k < a.size(); ++k) {
        a[k] = (2.0 * uniform() - 1.0) / static_cast<double>((k + 1) * (k + 1));
      }
      *f = sine_series(std::move(a));
    }
  } else {
    throw Error(ErrorCode::kConfiguration,
                "initial data '" + name + "' is not in the catalog");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Running

namespace {

std::string utc_now() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_atomically(const fs::path& path,
                      const std::function<void(std::ostream&)>& writer) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    writer(out);
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

int default_sweep_points(double lo, double hi) {
  const int per_decade = 16;
  return std::max(8, static_cast<int>(std::ceil(per_decade * std::log10(hi / lo))) + 1);
}

void write_result(const ScenarioResult& r, std::ostream& os) {
  const Scenario& s = r.scenario;
  auto kv = [&os](const std::string& k, const std::string& v) {
    os << k << '=' << v << '\n';
  };
  kv("scenario", s.name);
  kv("version", kVersion);
  kv("started", r.started);
  kv("finished", r.finished);
  kv("exploratory", s.exploratory ? "1" : "0");
  kv("rho1", num(s.params.rho1));
  kv("rho2", num(s.params.rho2));
  kv("kappa1", num(s.params.kappa1));
  kv("kappa2", num(s.params.kappa2));
  kv("damping_side", active_side_name(s.side));
  kv("damping_scale", num(s.damping_scale));
  kv("damping_exponent", num(s.damping_exponent));
  kv("alpha", num(r.alpha));
  kv("mesh_n", std::to_string(s.mesh_n));
  kv("dt", num(s.dt));
  kv("t_end", num(s.t_end));
  kv("sample_every", std::to_string(s.sample_every));
  kv("omega_lo", num(s.omega_lo));
  if (s.omega_hi) kv("omega_hi", num(*s.omega_hi));
  if (s.sweep_points) kv("sweep_points", std::to_string(*s.sweep_points));
  kv("initial_data", s.initial_data);
  kv("seed", std::to_string(s.seed));
  kv("initial_graph_norm", num(r.initial_graph_norm));
  kv("energy_drift", num(r.energy_drift));
  kv("decay_fitted", r.decay.fitted ? "1" : "0");
  kv("decay_reason", r.decay.reason);
  if (r.decay.fitted) {
    kv("decay_window_lo", num(r.decay.fit.window.lo));
    kv("decay_window_hi", num(r.decay.fit.window.hi));
    kv("decay_exponent", num(r.decay.fit.exponent));
    kv("decay_constant", num(r.decay.fit.constant));
    kv("decay_residual", num(r.decay.fit.residual));
    kv("decay_points", std::to_string(r.decay.fit.points));
    kv("bound_max", num(r.decay.bound.max_value));
    kv("bound_min", num(r.decay.bound.min_value));
    kv("bound_ratio", num(r.decay.bound.ratio));
  }
  if (r.decay.scaling_region) {
    kv("scaling_window_lo", num(r.decay.scaling_region->window.lo));
    kv("scaling_window_hi", num(r.decay.scaling_region->window.hi));
    kv("scaling_exponent", num(r.decay.scaling_region->exponent));
  }
  kv("sweep_fitted", r.sweep.fitted ? "1" : "0");
  kv("sweep_reason", r.sweep.reason);
  kv("fit_lo", num(r.sweep.fit_lo));
  kv("fit_hi", num(r.sweep.fit_hi));
  kv("resolved_omega_max", num(r.sweep.resolved_omega_max));
  if (r.sweep.fitted) {
    kv("beta", num(r.sweep.beta));
    kv("beta_residual", num(r.sweep.residual));
    kv("certificate", num(r.sweep.certificate.value));
    kv("certificate_omega", num(r.sweep.certificate.argmax));
  }
  kv("spectrum_computed", r.spectrum.computed ? "1" : "0");
  kv("spectrum_reason", r.spectrum.reason);
  if (r.spectrum.computed) {
    kv("spectral_abscissa", num(r.spectrum.spectral_abscissa));
    kv("imaginary_axis_clearance", num(r.spectrum.imaginary_axis_clearance));
    kv("spectral_radius", num(r.spectrum.spectral_radius));
    kv("eigenvalue_count", std::to_string(r.spectrum.count));
  }
}

void summarize_decay(const Trajectory& traj, const Scenario& s,
                     DecaySummary& out) {
  const WindowSelection sel = select_decay_window(traj, s.params);
  if (sel.usable) {
    out.fit = fit_decay_exponent(traj, sel.window);
    out.bound = normalized_bound(traj, sel.window);
    out.fitted = true;
  } else {
    out.reason = "inconclusive (window policy): " + sel.reason;
  }
  const WindowSelection region = select_scaling_region(traj, s.params);
  if (region.usable) out.scaling_region = fit_decay_exponent(traj, region.window);
}

void summarize_sweep(const ResolventSweep& sweep, SweepSummary& out) {
  out.fit_lo = sweep.fit_lo;
  out.fit_hi = sweep.fit_hi;
  out.resolved_omega_max = sweep.resolved_omega_max;
  try {
    const ExponentFit f = fit_resolvent_exponent(sweep);
    out.beta = f.exponent;
    out.residual = f.residual;
    out.certificate = boundedness_certificate(sweep, 2.0);
    out.fitted = true;
  } catch (const Error& e) {
    out.reason = e.what();
  }
}

void summarize_spectrum(const SpectrumReport& rep, SpectrumSummary& out) {
  out.computed = true;
  out.spectral_abscissa = rep.spectral_abscissa;
  out.imaginary_axis_clearance = rep.imaginary_axis_clearance;
  out.spectral_radius = rep.spectral_radius;
  out.count = rep.eigenvalues.size();
}

}  // namespace

ScenarioResult run_scenario(const Scenario& s,
                            const std::optional<fs::path>& out_dir,
                            const RunOptions& options) {
  ScenarioResult r;
  r.scenario = s;
  r.started = utc_now();
  try {
    const DampingConfiguration damping = s.damping();
    AssemblyOptions assembly;
    assembly.enforce_hypotheses = !s.exploratory;
    const GeneratorSystem sys =
        assemble_generator(build_mesh(s.mesh_n), s.params, damping, assembly);
    if (s.side != ActiveSide::kNone) r.alpha = s.damping_exponent;

    const DiscreteState u0 =
        interpolate(sys.mesh(), make_initial_data(s.initial_data, s.seed));
    const Trajectory traj = simulate(sys, u0, s.t_end, s.dt, s.sample_every);
    r.initial_graph_norm = traj.initial_graph_norm;
    const double e0 = traj.energies.front();
    for (double e : traj.energies) {
      if (e0 > 0.0) r.energy_drift = std::max(r.energy_drift, std::abs(e - e0) / e0);
    }

    if (!(traj.h_norms.front() > 0.0)) {
      r.decay.reason = "fit error: initial state is zero";
    } else if (!damping.any_active()) {
      r.decay.reason = "conservative";
    } else {
      summarize_decay(traj, s, r.decay);
    }

    const double hi = s.omega_hi.value_or(resolved_omega_max(sys));
    const int points = s.sweep_points.value_or(default_sweep_points(s.omega_lo, hi));
    SweepOptions sweep_options;
    sweep_options.threads = options.sweep_threads;
    const ResolventOperator op(sys, sweep_options.spectral);
    const ResolventSweep sweep =
        resolvent_sweep(op, resolved_omega_max(sys), s.omega_lo, hi, points,
                        sweep_options);
    summarize_sweep(sweep, r.sweep);

    const SpectrumReport spec = spectrum_of(op.whitened());
    summarize_spectrum(spec, r.spectrum);
    r.finished = utc_now();

    if (out_dir) {
      const fs::path dir = *out_dir / s.name;
      fs::create_directories(dir);
      write_atomically(dir / "trajectory.csv",
                       [&](std::ostream& os) { write_trajectory_csv(traj, os); });
      write_atomically(dir / "sweep.csv",
                       [&](std::ostream& os) { write_sweep_csv(sweep, os); });
      write_atomically(dir / "spectrum.csv",
                       [&](std::ostream& os) { write_spectrum_csv(spec, os); });
      write_atomically(dir / "result.txt",
                       [&](std::ostream& os) { write_result(r, os); });
    }
  } catch (const Error& e) {
    throw Error(e.code(), "scenario " + s.name + ": " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::kIo, "scenario " + s.name + ": " + e.what());
  }
  return r;
}

std::vector<ScenarioResult> run_scenarios(const std::vector<Scenario>& scenarios,
                                          const std::optional<fs::path>& out_dir,
                                          int jobs) {
  std::vector<ScenarioResult> results(scenarios.size());
  std::vector<std::exception_ptr> errors(scenarios.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) {
      try {
        results[i] = run_scenario(scenarios[i], out_dir);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(scenarios.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

// ---------------------------------------------------------------------------
// Reporting

std::string verdict(const ScenarioResult& r, const VerdictWindows& w) {
  if (r.scenario.exploratory) return "outside the single-damping alpha<1 hypotheses - no claim";
  if (!r.decay.fitted) return "inconclusive (window policy)";
  const bool decay_ok = r.decay.fit.exponent >= w.decay_lo &&
                        r.decay.fit.exponent <= w.decay_hi &&
                        r.decay.bound.ratio <= w.bound_ratio_max;
  const bool beta_ok = r.sweep.fitted && r.sweep.beta >= w.beta_lo &&
                       r.sweep.beta <= w.beta_hi;
  return decay_ok && beta_ok ? "consistent with t^-1/2" : "not consistent with t^-1/2";
}

std::string table_report(const std::vector<ScenarioResult>& results,
                         const VerdictWindows& w) {
  std::ostringstream os;
  char buf[512];
  os << "Per-scenario measurements (claim = stated decay order of ||U(t)||_H;\n"
        "measured = fitted exponents from this run)\n";
  std::snprintf(buf, sizeof buf, "%-20s %-8s %-6s %-9s %-14s %-13s %-12s %s\n",
                "scenario", "damping", "alpha", "claim", "measured_decay",
                "measured_beta", "abscissa", "verdict");
  os << buf;
  for (const auto& r : results) {
    char claim[32] = "-";
    char decay[32] = "-";
    char beta[32] = "-";
    char absc[32] = "-";
    if (!r.scenario.exploratory) {
      std::snprintf(claim, sizeof claim, "claim=%g", kClaimedDecayOrder);
    }
    if (r.decay.fitted) std::snprintf(decay, sizeof decay, "%.4f", r.decay.fit.exponent);
    if (r.sweep.fitted) std::snprintf(beta, sizeof beta, "%.4f", r.sweep.beta);
    if (r.spectrum.computed) {
      std::snprintf(absc, sizeof absc, "%.3e", r.spectrum.spectral_abscissa);
    }
    std::snprintf(buf, sizeof buf, "%-20s %-8s %-6.3g %-9s %-14s %-13s %-12s %s\n",
                  r.scenario.name.c_str(), active_side_name(r.scenario.side),
                  r.alpha, claim, decay, beta, absc, verdict(r, w).c_str());
    os << buf;
  }

  // One row per single-damping regime, mirroring the stated summary:
  // exactly one of D1, D2 vanishes and alpha < 1 gives order t^-1/2.
  os << "\nRegime summary (claim vs measurement)\n";
  std::snprintf(buf, sizeof buf, "%-34s %-9s %-24s %s\n", "regime", "claim",
                "measured_decay", "verdicts");
  os << buf;
  const std::pair<ActiveSide, const char*> regimes[] = {
      {ActiveSide::kBending, "D1=0, D2 degenerate, alpha<1"},
      {ActiveSide::kShear, "D2=0, D1 degenerate, alpha<1"}};
  for (const auto& [side, label] : regimes) {
    std::vector<double> exps;
    int total = 0;
    int consistent = 0;
    for (const auto& r : results) {
      if (r.scenario.exploratory || r.scenario.side != side) continue;
      ++total;
      if (r.decay.fitted) exps.push_back(r.decay.fit.exponent);
      if (verdict(r, w) == "consistent with t^-1/2") ++consistent;
    }
    std::string measured = "-";
    if (!exps.empty()) {
      const auto [lo, hi] = std::minmax_element(exps.begin(), exps.end());
      char range[64];
      std::snprintf(range, sizeof range, "%.4f..%.4f (%zu fits)", *lo, *hi,
                    exps.size());
      measured = range;
    }
    char claim[32];
    std::snprintf(claim, sizeof claim, "claim=%g", kClaimedDecayOrder);
    char tally[64];
    std::snprintf(tally, sizeof tally, "%d/%d consistent", consistent, total);
    std::snprintf(buf, sizeof buf, "%-34s %-9s %-24s %s\n", label, claim,
                  measured.c_str(), total ? tally : "no scenarios");
    os << buf;
  }
  return os.str();
}

namespace {

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "missing " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::ifstream open_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "missing " + path.string());
  return in;
}

}  // namespace

std::vector<ScenarioResult> load_results(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kIo, dir.string() + " is not a directory");
  }
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "result.txt")) {
      subdirs.push_back(entry.path());
    }
  }
  std::sort(subdirs.begin(), subdirs.end());
  std::vector<ScenarioResult> results;
  for (const auto& sub : subdirs) {
    auto kv = read_key_values(sub / "result.txt");
    auto get = [&](const std::string& k) -> std::string {
      const auto it = kv.find(k);
      if (it == kv.end()) {
        throw Error(ErrorCode::kInput, (sub / "result.txt").string() + " lacks " + k);
      }
      return it->second;
    };
    auto getd = [&](const std::string& k) { return std::strtod(get(k).c_str(), nullptr); };

    ScenarioResult r;
    Scenario& s = r.scenario;
    s.name = get("scenario");
    s.exploratory = get("exploratory") == "1";
    s.params = {getd("rho1"), getd("rho2"), getd("kappa1"), getd("kappa2")};
    const std::string side = get("damping_side");
    s.side = side == "shear"     ? ActiveSide::kShear
             : side == "bending" ? ActiveSide::kBending
             : side == "both"    ? ActiveSide::kBoth
                                 : ActiveSide::kNone;
    s.damping_scale = getd("damping_scale");
    s.damping_exponent = getd("damping_exponent");
    s.mesh_n = std::stoi(get("mesh_n"));
    s.dt = getd("dt");
    s.t_end = getd("t_end");
    s.sample_every = std::stoi(get("sample_every"));
    s.omega_lo = getd("omega_lo");
    if (kv.count("omega_hi")) s.omega_hi = getd("omega_hi");
    if (kv.count("sweep_points")) s.sweep_points = std::stoi(get("sweep_points"));
    s.initial_data = get("initial_data");
    s.seed = std::stoull(get("seed"));
    r.alpha = getd("alpha");
    r.initial_graph_norm = getd("initial_graph_norm");
    r.energy_drift = getd("energy_drift");
    r.started = get("started");
    r.finished = get("finished");

    // Every reported number is refit from the raw CSVs.
    auto tin = open_csv(sub / "trajectory.csv");
    Trajectory traj = read_trajectory_csv(tin);
    traj.initial_graph_norm = r.initial_graph_norm;
    r.decay.reason = get("decay_reason");
    if (get("decay_fitted") == "1") {
      const TimeWindow window{getd("decay_window_lo"), getd("decay_window_hi")};
      r.decay.fit = fit_decay_exponent(traj, window);
      r.decay.bound = normalized_bound(traj, window);
      r.decay.fitted = true;
    }
    if (kv.count("scaling_window_lo")) {
      r.decay.scaling_region = fit_decay_exponent(
          traj, {getd("scaling_window_lo"), getd("scaling_window_hi")});
    }

    auto sin = open_csv(sub / "sweep.csv");
    const ResolventSweep sweep = read_sweep_csv(sin, getd("fit_lo"), getd("fit_hi"));
    summarize_sweep(sweep, r.sweep);
    r.sweep.resolved_omega_max = getd("resolved_omega_max");

    auto spin = open_csv(sub / "spectrum.csv");
    const SpectrumReport spec = read_spectrum_csv(spin);
    if (get("spectrum_computed") == "1") summarize_spectrum(spec, r.spectrum);
    results.push_back(std::move(r));
  }
  if (results.empty()) {
    throw Error(ErrorCode::kInput, "no scenario results under " + dir.string());
  }
  return results;
}

std::vector<fs::path> emit_plots(const fs::path& dir) {
  const std::vector<ScenarioResult> results = load_results(dir);
  std::vector<fs::path> written;
  for (const auto& r : results) {
    const fs::path sub = dir / r.scenario.name;
    for (const char* f : {"trajectory.csv", "sweep.csv", "spectrum.csv"}) {
      if (!fs::exists(sub / f)) {
        throw Error(ErrorCode::kIo, "missing " + (sub / f).string());
      }
    }
    const std::string title = r.scenario.name;

    // Reference lines pass through the fitted curve at the geometric middle
    // of the fit window.
    std::string decay_ref = "# no decay fit: reference line omitted\n";
    if (r.decay.fitted) {
      const double tm = std::sqrt(r.decay.fit.window.lo * r.decay.fit.window.hi);
      const double hm = r.decay.fit.constant * r.initial_graph_norm *
                        std::pow(tm, -r.decay.fit.exponent);
      decay_ref = "ref(x) = " + num(hm) + " * (x / " + num(tm) + ")**(-0.5)\n";
    }
    write_atomically(sub / "decay.gp", [&](std::ostream& os) {
      os << "set datafile separator ','\n"
         << "set logscale xy\n"
         << "set xlabel 't'\nset ylabel '||U(t)||_H'\n"
         << "set title '" << title << ": energy-norm decay'\n"
         << decay_ref;
      os << "plot 'trajectory.csv' using 1:2 skip 1 with lines title 'h_norm'";
      if (r.decay.fitted) os << ", ref(x) with lines dashtype 2 title 'slope -1/2'";
      os << '\n';
    });

    std::string sweep_ref = "# no resolvent fit: reference line omitted\n";
    if (r.sweep.fitted) {
      const double wm = std::sqrt(r.sweep.fit_lo * r.sweep.fit_hi);
      // Slope-2 line through the worst-case ratio, placed at the midpoint.
      const double nm = r.sweep.certificate.value * wm * wm;
      sweep_ref = "ref(x) = " + num(nm) + " * (x / " + num(wm) + ")**2\n";
    }
    write_atomically(sub / "resolvent.gp", [&](std::ostream& os) {
      os << "set datafile separator ','\n"
         << "set logscale xy\n"
         << "set xlabel 'omega'\nset ylabel '||(i omega - A_h)^{-1}||_H'\n"
         << "set title '" << title << ": resolvent growth'\n"
         << sweep_ref
         << "plot 'sweep.csv' using 1:(strcol(4) eq 'grid' ? $2 : 1/0) skip 1 "
            "with points title 'grid', "
         << "'sweep.csv' using 1:(strcol(4) eq 'peak' ? $2 : 1/0) skip 1 "
            "with points title 'bin supremum'";
      if (r.sweep.fitted) os << ", ref(x) with lines dashtype 2 title 'slope +2'";
      os << '\n';
    });

    write_atomically(sub / "spectrum.gp", [&](std::ostream& os) {
      os << "set datafile separator ','\n"
         << "set xlabel 'Re lambda'\nset ylabel 'Im lambda'\n"
         << "set title '" << title << ": spectrum of A_h'\n"
         << "plot 'spectrum.csv' using 1:2 skip 1 with points pt 7 ps 0.4 "
            "title 'eigenvalues'\n";
    });
    written.push_back(sub / "decay.gp");
    written.push_back(sub / "resolvent.gp");
    written.push_back(sub / "spectrum.gp");
  }
  return written;
}

}  // namespace kvbeam
