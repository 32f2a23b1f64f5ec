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

#include <functional>
#include <string>

namespace kvbeam {

// Physical constants of the beam: mass density, rotational inertia, shear
// stiffness and bending stiffness. All must be strictly positive and finite.
struct BeamParameters {
  double rho1 = 1.0;
  double rho2 = 1.0;
  double kappa1 = 1.0;
  double kappa2 = 1.0;

  void validate() const;

  // Fastest of the two characteristic wave speeds.
  double wave_speed() const;
};

enum class DampingSide { kShear, kBending };

const char* damping_side_name(DampingSide side) noexcept;

using ScalarFunction = std::function<double(double)>;

// Kelvin-Voigt coefficient on [-1, 1]. Identically zero on [-1, 0]; on (0, 1]
// it equals a(x), which is a power law c*x^gamma or a user-supplied function
// with an explicit derivative.
class DampingProfile {
 public:
  enum class Form { kVanishing, kPowerLaw, kCustom };

  static DampingProfile vanishing(DampingSide side);
  static DampingProfile power_law(DampingSide side, double scale,
                                  double exponent);
  static DampingProfile custom(DampingSide side, ScalarFunction a,
                               ScalarFunction da);

  DampingSide side() const noexcept { return side_; }
  Form form() const noexcept { return form_; }
  bool is_vanishing() const noexcept { return form_ == Form::kVanishing; }

  // Power-law parameters; meaningful only for Form::kPowerLaw.
  double scale() const noexcept { return scale_; }
  double exponent() const noexcept { return exponent_; }

  // a(x) and a'(x) on (0, 1]. Callers are responsible for the support.
  double a(double x) const;
  double da(double x) const;

  std::string describe() const;

 private:
  DampingProfile(DampingSide side, Form form) : side_(side), form_(form) {}

  DampingSide side_;
  Form form_;
  double scale_ = 0.0;
  double exponent_ = 0.0;
  ScalarFunction a_;
  ScalarFunction da_;
};

struct DampingConfiguration {
  DampingProfile shear = DampingProfile::vanishing(DampingSide::kShear);
  DampingProfile bending = DampingProfile::vanishing(DampingSide::kBending);

  bool any_active() const noexcept {
    return !shear.is_vanishing() || !bending.is_vanishing();
  }
  // Exactly one of the two coefficients is active.
  bool single_damping() const noexcept {
    return shear.is_vanishing() != bending.is_vanishing();
  }
};

struct DegeneracyIndex {
  double alpha = 0.0;
  bool valid = false;  // alpha < 1
};

struct DegeneracySampling {
  double ratio = 0.9;     // geometric factor between samples x_{k+1} = r x_k
  double cutoff = 1e-10;  // smallest sampled abscissa
};

// sup_{0<x<=1} x|a'(x)|/a(x). Exact for power laws, sampled otherwise.
DegeneracyIndex degeneracy_exponent(const DampingProfile& profile,
                                    const DegeneracySampling& sampling = {});

// Throws ErrorCode::kHypothesis unless the profile is vanishing or has
// alpha < 1 with positive samples.
void validate_hypotheses(const DampingProfile& profile);

double evaluate_damping(const DampingProfile& profile, double x);

struct Field {
  ScalarFunction value;
  ScalarFunction derivative;

  static Field zero();
};

// Displacement, rotation and their velocities as closed-form functions.
struct ContinuousState {
  Field w = Field::zero();
  Field phi = Field::zero();
  Field v = Field::zero();
  Field psi = Field::zero();

  // Throws ErrorCode::kInput if w or phi violates the Dirichlet conditions.
  void check_boundary(double tolerance = 1e-12) const;
};

struct QuadratureRule {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
};

double energy(const ContinuousState& state, const BeamParameters& params,
              const QuadratureRule& rule = {});

double dissipation_rate(const ContinuousState& state,
                        const DampingConfiguration& damping,
                        const QuadratureRule& rule = {});

struct HardyReport {
  double integral = 0.0;  // int_0^1 tau / a(tau) dtau
  double bound = 0.0;     // 1 / (a(1) (2 - alpha))
  bool holds = false;
};

HardyReport hardy_bound_check(const DampingProfile& profile,
                              const QuadratureRule& rule = {});

// Integral of f over [lo, hi]. The part inside (0, 1] uses a rule whose
// nodes cluster at x = 0, where damping coefficients are degenerate; the
// rest uses adaptive Gauss-Kronrod. Exposed for the discretization tests.
double integrate_graded(const ScalarFunction& f, double lo, double hi,
                        const QuadratureRule& rule = {});

}  // namespace kvbeam
