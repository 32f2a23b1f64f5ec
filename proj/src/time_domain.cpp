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

#include "kvbeam/time_domain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "kvbeam/error.hpp"
#include "kvbeam/frequency_domain.hpp"

namespace kvbeam {

MidpointStepper::MidpointStepper(const GeneratorSystem& sys, double dt)
    : dt_(dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::kConfiguration, "time step must be positive");
  }
  explicit_part_ = sys.lhs() + 0.5 * dt * sys.rhs();
  SparseMatrix left = sys.lhs() - 0.5 * dt * sys.rhs();
  left.makeCompressed();
  implicit_part_ = std::make_shared<Eigen::SparseLU<SparseMatrix>>();
  implicit_part_->analyzePattern(left);
  implicit_part_->factorize(left);
  if (implicit_part_->info() != Eigen::Success) {
    throw Error(ErrorCode::kSolver, "midpoint matrix factorization failed");
  }
}

Eigen::VectorXd MidpointStepper::advance(const Eigen::VectorXd& u) const {
  Eigen::VectorXd next = implicit_part_->solve(explicit_part_ * u);
  if (implicit_part_->info() != Eigen::Success) {
    throw Error(ErrorCode::kSolver, "midpoint solve failed");
  }
  return next;
}

DiscreteState step(const GeneratorSystem& sys, const DiscreteState& u,
                   double dt) {
  const MidpointStepper stepper(sys, dt);
  return DiscreteState::from_stacked(stepper.advance(u.stacked()));
}

namespace {

void record(const GeneratorSystem& sys, const Eigen::VectorXd& u, double t,
            Trajectory& traj) {
  const double h = h_norm(sys, u);
  const double d = -sys.viscous_power(u);
  if (!std::isfinite(h) || !std::isfinite(d)) {
    std::ostringstream os;
    os << "non-finite state at t = " << t;
    throw Error(ErrorCode::kInstability, os.str());
  }
  traj.times.push_back(t);
  traj.h_norms.push_back(h);
  traj.energies.push_back(0.5 * h * h);
  traj.dissipation.push_back(std::min(d, 0.0));
}

}  // namespace

Trajectory simulate(const GeneratorSystem& sys, const DiscreteState& u0,
                    double t_end, double dt, int sample_every) {
  if (!(t_end > 0.0) || !(dt > 0.0)) {
    throw Error(ErrorCode::kConfiguration, "t_end and dt must be positive");
  }
  if (sample_every < 1) {
    throw Error(ErrorCode::kConfiguration, "sample_every must be >= 1");
  }
  Trajectory traj;
  traj.initial_graph_norm = graph_norm(sys, u0).graph_norm;
  const MidpointStepper stepper(sys, dt);
  const long steps = std::lround(std::ceil(t_end / dt - 1e-9));
  Eigen::VectorXd u = u0.stacked();
  record(sys, u, 0.0, traj);
  for (long k = 1; k <= steps; ++k) {
    u = stepper.advance(u);
    if (k % sample_every == 0 || k == steps) record(sys, u, k * dt, traj);
  }
  return traj;
}

DissipationResidual dissipation_identity_residual(const Trajectory& traj) {
  if (traj.size() < 2) {
    throw Error(ErrorCode::kInput, "residual needs at least two samples");
  }
  DissipationResidual r;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double rate = (traj.energies[k + 1] - traj.energies[k]) /
                        (traj.times[k + 1] - traj.times[k]);
    const double mean = 0.5 * (traj.dissipation[k] + traj.dissipation[k + 1]);
    r.residuals.push_back(rate - mean);
    r.max_abs = std::max(r.max_abs, std::abs(rate - mean));
  }
  return r;
}

std::vector<std::size_t> thinned_indices(const Trajectory& traj,
                                         TimeWindow window, int per_decade) {
  std::vector<std::size_t> idx;
  const double gap = std::log(10.0) / per_decade;
  double last = -1e300;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    if (t < window.lo || t > window.hi || !(t > 0.0)) continue;
    if (std::log(t) >= last + gap) {
      idx.push_back(k);
      last = std::log(t);
    }
  }
  return idx;
}

DecayFit fit_decay_exponent(const Trajectory& traj, TimeWindow window) {
  if (!(window.lo > 0.0) || !(window.hi > window.lo)) {
    throw Error(ErrorCode::kFit, "decay window needs 0 < t_lo < t_hi");
  }
  const auto idx = thinned_indices(traj, window);
  std::vector<double> t, h;
  for (std::size_t k : idx) {
    if (!(traj.h_norms[k] > 0.0)) {
      std::ostringstream os;
      os << "non-positive norm at t = " << traj.times[k] << " inside the window";
      throw Error(ErrorCode::kFit, os.str());
    }
    t.push_back(traj.times[k]);
    h.push_back(traj.h_norms[k]);
  }
  if (t.size() < 10) {
    std::ostringstream os;
    os << "decay fit needs >= 10 samples in [" << window.lo << ", "
       << window.hi << "], have " << t.size();
    throw Error(ErrorCode::kFit, os.str());
  }
  const ExponentFit f = fit_log_log(t, h);
  DecayFit d;
  d.exponent = -f.exponent;
  d.constant = std::exp(f.intercept);
  if (traj.initial_graph_norm > 0.0) d.constant /= traj.initial_graph_norm;
  d.window = window;
  d.residual = f.residual;
  d.points = f.points;
  return d;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct LocalSlopes {
  std::vector<double> t;
  std::vector<double> slope;
  std::string failure;
};

// Log-log slopes fitted over [t/span, t*span] at each thinned sample whose
// neighbourhood fits inside [lo, t_end].
LocalSlopes local_slopes(const Trajectory& traj, double lo,
                         const WindowPolicy& policy) {
  LocalSlopes out;
  const auto idx = thinned_indices(traj, {lo, traj.times.back()});
  std::vector<double> lt, lh;
  for (std::size_t k : idx) {
    if (!(traj.h_norms[k] > 0.0)) {
      out.failure = "norm reached zero";
      return out;
    }
    lt.push_back(std::log(traj.times[k]));
    lh.push_back(std::log(traj.h_norms[k]));
  }
  const double span = std::log(policy.slope_span);
  for (std::size_t i = 0; i < lt.size(); ++i) {
    if (lt[i] - span < lt.front() || lt[i] + span > lt.back()) continue;
    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < lt.size(); ++j) {
      if (std::abs(lt[j] - lt[i]) <= span) {
        xs.push_back(std::exp(lt[j]));
        ys.push_back(std::exp(lh[j]));
      }
    }
    if (xs.size() < 3) continue;
    out.t.push_back(std::exp(lt[i]));
    out.slope.push_back(fit_log_log(xs, ys).exponent);
  }
  if (out.slope.size() < 3) out.failure = "too few samples after the transient";
  return out;
}

}  // namespace

WindowSelection select_decay_window(const Trajectory& traj,
                                    const BeamParameters& params,
                                    const WindowPolicy& policy) {
  WindowSelection sel;
  if (traj.size() < 2) {
    sel.reason = "trajectory too short";
    return sel;
  }
  const double t_end = traj.times.back();
  sel.window.lo = policy.transient_crossings * 2.0 / params.wave_speed();
  sel.window.hi = t_end;
  if (!(t_end > sel.window.lo)) {
    sel.reason = "trajectory ends before the transient";
    return sel;
  }

  const LocalSlopes ls = local_slopes(traj, sel.window.lo, policy);
  if (!ls.failure.empty()) {
    sel.reason = ls.failure;
    return sel;
  }
  const std::vector<double>& slope_t = ls.t;
  const std::vector<double>& slope = ls.slope;

  // Shrink t_hi to the first point where the slope exceeds the window
  // median by the steepening margin; iterate to a fixed point.
  for (int iter = 0; iter < 50; ++iter) {
    std::vector<double> inside;
    for (std::size_t i = 0; i < slope.size(); ++i) {
      if (slope_t[i] <= sel.window.hi) inside.push_back(slope[i]);
    }
    if (inside.size() < 3) break;
    const double m = median(inside);
    sel.median_slope = m;
    if (!(m < 0.0)) break;
    double cut = sel.window.hi;
    for (std::size_t i = 0; i < slope.size() && slope_t[i] <= sel.window.hi; ++i) {
      if (slope[i] < (1.0 + policy.steepening) * m) {
        cut = slope_t[i];
        break;
      }
    }
    if (cut >= sel.window.hi) break;
    sel.window.hi = cut;
  }

  if (!(sel.median_slope < 0.0)) {
    sel.reason = "no decay after the transient";
    return sel;
  }
  if (thinned_indices(traj, sel.window).size() <
      static_cast<std::size_t>(policy.min_points)) {
    sel.reason = "window too narrow";
    return sel;
  }
  sel.usable = true;
  return sel;
}

WindowSelection select_scaling_region(const Trajectory& traj,
                                      const BeamParameters& params,
                                      const WindowPolicy& policy) {
  WindowSelection sel;
  if (traj.size() < 2) {
    sel.reason = "trajectory too short";
    return sel;
  }
  const double lo = policy.transient_crossings * 2.0 / params.wave_speed();
  if (!(traj.times.back() > lo)) {
    sel.reason = "trajectory ends before the transient";
    return sel;
  }
  const LocalSlopes ls = local_slopes(traj, lo, policy);
  if (!ls.failure.empty()) {
    sel.reason = ls.failure;
    return sel;
  }
  const std::size_t n = ls.slope.size();
  double best_span = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      std::vector<double> run(ls.slope.begin() + i, ls.slope.begin() + j + 1);
      const double m = median(run);
      if (!(m < 0.0)) continue;
      const auto [mn, mx] = std::minmax_element(run.begin(), run.end());
      if (*mn < (1.0 + policy.steepening) * m || *mx > (1.0 - policy.steepening) * m) {
        continue;
      }
      const double span = std::log(ls.t[j] / ls.t[i]);
      if (span > best_span &&
          thinned_indices(traj, {ls.t[i], ls.t[j]}).size() >=
              static_cast<std::size_t>(policy.min_points)) {
        best_span = span;
        sel.window = {ls.t[i], ls.t[j]};
        sel.median_slope = m;
      }
    }
  }
  if (best_span == 0.0) {
    sel.reason = "no stable power-law region";
    return sel;
  }
  sel.usable = true;
  return sel;
}

NormalizedBound normalized_bound(const Trajectory& traj, TimeWindow window) {
  NormalizedBound b;
  b.min_value = std::numeric_limits<double>::infinity();
  const double g = traj.initial_graph_norm > 0.0 ? traj.initial_graph_norm : 1.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    if (t < window.lo || t > window.hi) continue;
    const double q = traj.h_norms[k] * std::sqrt(t) / g;
    b.max_value = std::max(b.max_value, q);
    b.min_value = std::min(b.min_value, q);
  }
  if (!std::isfinite(b.min_value)) b.min_value = 0.0;
  b.ratio = b.min_value > 0.0 ? b.max_value / b.min_value
                              : std::numeric_limits<double>::infinity();
  return b;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
  os << "t,h_norm,energy,dissipation,normalized_bound\n";
  const double g = traj.initial_graph_norm;
  char buf[160];
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double q = g > 0.0 ? traj.h_norms[k] * std::sqrt(traj.times[k]) / g : 0.0;
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  traj.times[k], traj.h_norms[k], traj.energies[k],
                  traj.dissipation[k], q);
    os << buf;
  }
}

Trajectory read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) ||
      line != "t,h_norm,energy,dissipation,normalized_bound") {
    throw Error(ErrorCode::kInput, "trajectory CSV header missing");
  }
  Trajectory traj;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    double t, h, e, d, q;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &t, &h, &e, &d, &q) != 5) {
      throw Error(ErrorCode::kInput,
                  "malformed trajectory CSV line " + std::to_string(lineno));
    }
    traj.times.push_back(t);
    traj.h_norms.push_back(h);
    traj.energies.push_back(e);
    traj.dissipation.push_back(d);
    if (traj.initial_graph_norm == 0.0 && t > 0.0 && q > 0.0) {
      traj.initial_graph_norm = h * std::sqrt(t) / q;
    }
  }
  return traj;
}

}  // namespace kvbeam
