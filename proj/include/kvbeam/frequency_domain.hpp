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

#include <complex>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "kvbeam/discretization.hpp"

namespace kvbeam {

// The generator in gram-orthonormal coordinates: with gram = L L^T,
// B = L^T A_h L^{-T}. The H-norm of U equals the Euclidean norm of L^T U, so
// operator norms of functions of A_h in H are spectral norms of B. B is
// skew-symmetric plus a negative semidefinite symmetric block.
Eigen::MatrixXd whitened_generator(const GeneratorSystem& sys);

struct SpectralOptions {
  int dense_cap = 4000;
};

struct SpectrumReport {
  std::vector<std::complex<double>> eigenvalues;
  double spectral_abscissa = 0.0;
  double imaginary_axis_clearance = 0.0;
  double spectral_radius = 0.0;
};

SpectrumReport spectrum(const GeneratorSystem& sys,
                        const SpectralOptions& options = {});

// Spectrum of an explicit real matrix (already in whitened coordinates).
SpectrumReport spectrum_of(const Eigen::MatrixXd& b);

// Resolvent evaluations share one complex Schur form B = Q T Q^*, so each
// frequency costs two triangular solves per power-iteration step.
class ResolventOperator {
 public:
  explicit ResolventOperator(const GeneratorSystem& sys,
                             const SpectralOptions& options = {});
  explicit ResolventOperator(Eigen::MatrixXd whitened);

  // ||(i omega - A_h)^{-1}||_H. Throws ErrorCode::kOnSpectrum when the
  // shifted matrix is numerically singular.
  double norm(double omega) const;

  // Same quantity without the on-spectrum check; +inf when singular.
  double try_norm(double omega) const;

  const Eigen::MatrixXd& whitened() const noexcept { return b_; }
  // Eigenvalues read off the Schur diagonal.
  const std::vector<std::complex<double>>& eigenvalues() const noexcept {
    return eigenvalues_;
  }

 private:
  void factor();

  Eigen::MatrixXd b_;
  Eigen::MatrixXcd schur_t_;
  std::vector<std::complex<double>> eigenvalues_;
  double scale_ = 0.0;  // Frobenius norm of B
};

double resolvent_norm(const GeneratorSystem& sys, double omega);

// Norms sampled on a log grid, plus the supremum of the norm over each grid
// bin. The supremum is located by also evaluating at the imaginary parts of
// the eigenvalues whose distance to the axis is below the bin width; the fit
// and the certificate use the bin suprema when present, since isolated grid
// samples mostly fall between resonances.
struct ResolventSweep {
  std::vector<double> omegas;
  std::vector<double> norms;     // NaN where rejected
  std::vector<bool> rejected;    // inside the guard band of an axis eigenvalue
  std::vector<bool> spikes;      // near-singular peaks
  std::vector<double> peak_omegas;
  std::vector<double> peak_norms;
  double fit_lo = 0.0;
  double fit_hi = 0.0;
  double resolved_omega_max = 0.0;
  double fitted_beta = 0.0;
  double fit_residual = 0.0;
};

struct SweepOptions {
  int threads = 1;
  double guard_band = 1e-6;  // relative distance to an axis eigenvalue
  SpectralOptions spectral;
};

// Frequencies the mesh resolves with at least four nodes per wavelength.
double resolved_omega_max(const GeneratorSystem& sys);

std::vector<double> log_grid(double lo, double hi, int points);

ResolventSweep resolvent_sweep(const GeneratorSystem& sys, double omega_lo,
                               double omega_hi, int points,
                               const SweepOptions& options = {});

// Sweep over an explicit operator; resolved_max caps the fit range.
ResolventSweep resolvent_sweep(const ResolventOperator& op, double resolved_max,
                               double omega_lo, double omega_hi, int points,
                               const SweepOptions& options = {});

// Builds a sweep from precomputed norms, fitting over [fit_lo, fit_hi].
ResolventSweep make_sweep(std::vector<double> omegas, std::vector<double> norms,
                          double fit_lo, double fit_hi);

struct ExponentFit {
  double exponent = 0.0;
  double intercept = 0.0;  // log-space
  double residual = 0.0;   // RMS log-log misfit
  int points = 0;
};

ExponentFit fit_resolvent_exponent(const ResolventSweep& sweep);

struct BoundednessCertificate {
  double value = 0.0;  // max of omega^{-beta} * norm over the fit range
  double argmax = 0.0;
};

BoundednessCertificate boundedness_certificate(const ResolventSweep& sweep,
                                               double beta);

// CSV with header omega,resolvent_norm,omega^-2*norm,kind; kind is grid,
// peak (bin supremum) or rejected.
void write_sweep_csv(const ResolventSweep& sweep, std::ostream& os);
// Reads a sweep back and refits over [fit_lo, fit_hi].
ResolventSweep read_sweep_csv(std::istream& is, double fit_lo, double fit_hi);

// CSV with header re,im.
void write_spectrum_csv(const SpectrumReport& report, std::ostream& os);
SpectrumReport read_spectrum_csv(std::istream& is);

// Least-squares slope of log(y) against log(x); shared by the decay fit.
ExponentFit fit_log_log(const std::vector<double>& x,
                        const std::vector<double>& y);

}  // namespace kvbeam
