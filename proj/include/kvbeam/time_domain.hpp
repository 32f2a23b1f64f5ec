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

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "kvbeam/discretization.hpp"

namespace kvbeam {

// Implicit midpoint map (E - dt/2 G) u+ = (E + dt/2 G) u with the left
// matrix factorized once.
class MidpointStepper {
 public:
  MidpointStepper(const GeneratorSystem& sys, double dt);

  Eigen::VectorXd advance(const Eigen::VectorXd& u) const;
  double dt() const noexcept { return dt_; }

 private:
  double dt_;
  SparseMatrix explicit_part_;
  std::shared_ptr<Eigen::SparseLU<SparseMatrix>> implicit_part_;
};

DiscreteState step(const GeneratorSystem& sys, const DiscreteState& u,
                   double dt);

struct Trajectory {
  std::vector<double> times;
  std::vector<double> h_norms;
  std::vector<double> energies;
  std::vector<double> dissipation;  // -(v,psi)^T D (v,psi) at each sample
  double initial_graph_norm = 0.0;

  std::size_t size() const noexcept { return times.size(); }
};

Trajectory simulate(const GeneratorSystem& sys, const DiscreteState& u0,
                    double t_end, double dt, int sample_every = 1);

struct DissipationResidual {
  std::vector<double> residuals;
  double max_abs = 0.0;
};

// (E_{k+1} - E_k)/(t_{k+1} - t_k) minus the mean of the two sampled rates.
DissipationResidual dissipation_identity_residual(const Trajectory& traj);

struct TimeWindow {
  double lo = 0.0;
  double hi = 0.0;
};

struct DecayFit {
  double exponent = 0.0;  // p in ||U(t)||_H ~ C t^{-p}
  double constant = 0.0;  // C / ||U0||_{D(A)}
  TimeWindow window;
  double residual = 0.0;
  int points = 0;
};

// Log-log least squares over logarithmically thinned samples in the window.
DecayFit fit_decay_exponent(const Trajectory& traj, TimeWindow window);

struct WindowPolicy {
  double transient_crossings = 5.0;  // t_lo in units of 2 / wave speed
  double steepening = 0.25;          // relative slope excess that ends the window
  double slope_span = 1.5;           // local slopes use samples in [t/s, t*s]
  int min_points = 10;
};

struct WindowSelection {
  TimeWindow window;
  bool usable = false;
  std::string reason;
  double median_slope = 0.0;
};

WindowSelection select_decay_window(const Trajectory& traj,
                                    const BeamParameters& params,
                                    const WindowPolicy& policy = {});

// Diagnostic alternative: the longest interval after the transient on which
// every local slope lies within the steepening margin of the interval's
// median slope.
WindowSelection select_scaling_region(const Trajectory& traj,
                                      const BeamParameters& params,
                                      const WindowPolicy& policy = {});

// max/min of h_norm(t) sqrt(t) / ||U0||_{D(A)} over the window, and its max.
struct NormalizedBound {
  double max_value = 0.0;
  double min_value = 0.0;
  double ratio = 0.0;
};

NormalizedBound normalized_bound(const Trajectory& traj, TimeWindow window);

// Log-thinned indices of samples with t in [lo, hi].
std::vector<std::size_t> thinned_indices(const Trajectory& traj,
                                         TimeWindow window,
                                         int per_decade = 64);

// CSV with header t,h_norm,energy,dissipation,normalized_bound.
void write_trajectory_csv(const Trajectory& traj, std::ostream& os);
Trajectory read_trajectory_csv(std::istream& is);

}  // namespace kvbeam
