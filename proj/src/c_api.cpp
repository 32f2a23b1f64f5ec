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

#include "kvbeam/kvbeam.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "kvbeam/discretization.hpp"
#include "kvbeam/error.hpp"
#include "kvbeam/experiments.hpp"
#include "kvbeam/frequency_domain.hpp"
#include "kvbeam/time_domain.hpp"

struct kvb_system {
  kvbeam::GeneratorSystem system;
};

struct kvb_trajectory {
  kvbeam::Trajectory trajectory;
};

namespace {

thread_local std::string g_last_error;

kvb_status fail(kvb_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs body, translating exceptions into status codes.
template <typename Body>
kvb_status guarded(Body&& body) {
  try {
    body();
    g_last_error.clear();
    return KVB_OK;
  } catch (const kvbeam::Error& e) {
    return fail(static_cast<kvb_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(KVB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(KVB_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(KVB_ERR_INTERNAL, "unknown error");
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

kvbeam::ActiveSide to_side(kvb_side side) {
  switch (side) {
    case KVB_SIDE_NONE: return kvbeam::ActiveSide::kNone;
    case KVB_SIDE_SHEAR: return kvbeam::ActiveSide::kShear;
    case KVB_SIDE_BENDING: return kvbeam::ActiveSide::kBending;
    case KVB_SIDE_BOTH: return kvbeam::ActiveSide::kBoth;
  }
  throw kvbeam::Error(kvbeam::ErrorCode::kConfiguration, "unknown damping side");
}

Eigen::Map<const Eigen::VectorXd> view(const kvb_system* s, const double* u) {
  return {u, static_cast<Eigen::Index>(s->system.dimension())};
}

}  // namespace

extern "C" {

const char* kvb_version(void) { return kvbeam::kVersion; }

const char* kvb_last_error_message(void) { return g_last_error.c_str(); }

const char* kvb_status_name(kvb_status status) {
  switch (status) {
    case KVB_OK: return "ok";
    case KVB_ERR_INVALID_ARGUMENT: return "invalid argument";
    case KVB_ERR_INTERNAL: return "internal error";
    default:
      if (status >= KVB_ERR_CONFIGURATION && status <= KVB_ERR_IO) {
        return kvbeam::error_code_name(static_cast<kvbeam::ErrorCode>(status));
      }
      return "unknown status";
  }
}

void kvb_system_spec_default(kvb_system_spec* spec) {
  if (!spec) return;
  *spec = kvb_system_spec{1.0, 1.0, 1.0, 1.0, KVB_SIDE_BENDING, 1.0, 0.5, 128, 1};
}

kvb_status kvb_system_create(const kvb_system_spec* spec, kvb_system** out) {
  if (!spec || !out) return fail(KVB_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    kvbeam::Scenario s;
    s.params = {spec->rho1, spec->rho2, spec->kappa1, spec->kappa2};
    s.side = to_side(spec->side);
    s.damping_scale = spec->damping_scale;
    s.damping_exponent = spec->damping_exponent;
    kvbeam::AssemblyOptions options;
    options.enforce_hypotheses = spec->enforce_hypotheses != 0;
    auto sys = kvbeam::assemble_generator(kvbeam::build_mesh(spec->mesh_elements),
                                          s.params, s.damping(), options);
    *out = new kvb_system{std::move(sys)};
  });
}

void kvb_system_destroy(kvb_system* system) { delete system; }

size_t kvb_system_dimension(const kvb_system* system) {
  return system ? static_cast<size_t>(system->system.dimension()) : 0;
}

kvb_status kvb_apply_generator(const kvb_system* system, const double* u,
                               double* out) {
  if (!system || !u || !out) return fail(KVB_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const Eigen::VectorXd y = system->system.apply(view(system, u));
    std::copy(y.data(), y.data() + y.size(), out);
  });
}

kvb_status kvb_h_norm(const kvb_system* system, const double* u, double* out) {
  if (!system || !u || !out) return fail(KVB_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = kvbeam::h_norm(system->system, Eigen::VectorXd(view(system, u)));
  });
}

kvb_status kvb_initial_data(const kvb_system* system, const char* name,
                            unsigned long long seed, double* u) {
  if (!system || !name || !u) return fail(KVB_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto state = kvbeam::interpolate(system->system.mesh(),
                                           kvbeam::make_initial_data(name, seed));
    const Eigen::VectorXd v = state.stacked();
    std::copy(v.data(), v.data() + v.size(), u);
  });
}

kvb_status kvb_export_triplets(const kvb_system* system, kvb_matrix which,
                               const char* path) {
  if (!system || !path) return fail(KVB_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const kvbeam::SparseMatrix* m = nullptr;
    switch (which) {
      case KVB_MATRIX_GRAM: m = &system->system.gram(); break;
      case KVB_MATRIX_LHS: m = &system->system.lhs(); break;
      case KVB_MATRIX_RHS: m = &system->system.rhs(); break;
    }
    if (!m) throw kvbeam::Error(kvbeam::ErrorCode::kInput, "unknown matrix");
    std::ofstream os(path);
    if (!os) throw kvbeam::Error(kvbeam::ErrorCode::kIo, std::string("cannot write ") + path);
    kvbeam::export_triplets(*m, os);
    if (!os) throw kvbeam::Error(kvbeam::ErrorCode::kIo, std::string("write failed: ") + path);
  });
}

kvb_status kvb_spectrum(const kvb_system* system, double* re, double* im,
                        size_t capacity, size_t* count, double* spectral_abscissa) {
  if (!system || !count) return fail(KVB_ERR_INVALID_ARGUMENT, "null argument");
  if (capacity > 0 && (!re || !im)) {
    return fail(KVB_ERR_INVALID_ARGUMENT, "null output arrays");
  }
  return guarded([&] {
    const auto report = kvbeam::spectrum(system->system);
    *count = report.eigenvalues.size();
    for (size_t i = 0; i < capacity && i < report.eigenvalues.size(); ++i) {
      re[i] = report.eigenvalues[i].real();
      im[i] = report.eigenvalues[i].imag();
    }
    if (spectral_abscissa) *spectral_abscissa = report.spectral_abscissa;
  });
}

kvb_status kvb_resolvent_norm(const kvb_system* system, double omega, double* out) {
  if (!system || !out) return fail(KVB_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = kvbeam::resolvent_norm(system->system, omega); });
}

kvb_status kvb_simulate(const kvb_system* system, const double* u0, double t_end,
                        double dt, int sample_every, kvb_trajectory** out) {
  if (!system || !u0 || !out) return fail(KVB_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    const auto state =
        kvbeam::DiscreteState::from_stacked(Eigen::VectorXd(view(system, u0)));
    auto traj = kvbeam::simulate(system->system, state, t_end, dt, sample_every);
    *out = new kvb_trajectory{std::move(traj)};
  });
}

void kvb_trajectory_destroy(kvb_trajectory* trajectory) { delete trajectory; }

size_t kvb_trajectory_size(const kvb_trajectory* t) {
  return t ? t->trajectory.size() : 0;
}
const double* kvb_trajectory_times(const kvb_trajectory* t) {
  return t ? t->trajectory.times.data() : nullptr;
}
const double* kvb_trajectory_h_norms(const kvb_trajectory* t) {
  return t ? t->trajectory.h_norms.data() : nullptr;
}
const double* kvb_trajectory_energies(const kvb_trajectory* t) {
  return t ? t->trajectory.energies.data() : nullptr;
}
double kvb_trajectory_graph_norm(const kvb_trajectory* t) {
  return t ? t->trajectory.initial_graph_norm : 0.0;
}

kvb_status kvb_config_validate(const char* path, size_t* scenarios, char** warnings) {
  if (!path) return fail(KVB_ERR_INVALID_ARGUMENT, "null argument");
  if (warnings) *warnings = nullptr;
  return guarded([&] {
    const auto parsed = kvbeam::parse_config_file(path);
    if (scenarios) *scenarios = parsed.scenarios.size();
    if (warnings) {
      std::string text;
      for (const auto& w : parsed.warnings) text += "warning: " + w + "\n";
      *warnings = duplicate(text);
    }
  });
}

kvb_status kvb_run_config(const char* path, const char* out_dir, int jobs,
                          char** report) {
  if (!path) return fail(KVB_ERR_INVALID_ARGUMENT, "null argument");
  if (report) *report = nullptr;
  return guarded([&] {
    const auto parsed = kvbeam::parse_config_file(path);
    std::optional<std::filesystem::path> dir;
    if (out_dir) dir = out_dir;
    const auto results = kvbeam::run_scenarios(parsed.scenarios, dir, jobs);
    if (report) *report = duplicate(kvbeam::table_report(results));
  });
}

kvb_status kvb_report(const char* run_dir, char** report) {
  if (!run_dir || !report) return fail(KVB_ERR_INVALID_ARGUMENT, "null argument");
  *report = nullptr;
  return guarded([&] {
    *report = duplicate(kvbeam::table_report(kvbeam::load_results(run_dir)));
  });
}

kvb_status kvb_plots(const char* run_dir, size_t* scripts_written) {
  if (!run_dir) return fail(KVB_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto written = kvbeam::emit_plots(run_dir);
    if (scripts_written) *scripts_written = written.size();
  });
}

void kvb_string_free(char* s) { std::free(s); }

}  // extern "C"
