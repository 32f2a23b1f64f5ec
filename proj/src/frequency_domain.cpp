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

#include "kvbeam/frequency_domain.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "kvbeam/error.hpp"

namespace kvbeam {

namespace {

constexpr double kSingularRatio = 1e-13;
constexpr double kAxisRoundoff = 1e-13;

void check_cap(const GeneratorSystem& sys, const SpectralOptions& options) {
  if (sys.dimension() > options.dense_cap) {
    std::ostringstream os;
    os << "dense analysis of dimension " << sys.dimension()
       << " exceeds the cap " << options.dense_cap << "; use a smaller mesh";
    throw Error(ErrorCode::kCapability, os.str());
  }
}

Eigen::MatrixXd lower_cholesky(const SparseMatrix& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(m)};
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kSolver,
                std::string(what) + " is not positive definite");
  }
  return llt.matrixL();
}

}  // namespace

Eigen::MatrixXd whitened_generator(const GeneratorSystem& sys) {
  const int m = 2 * sys.block_size();
  const Eigen::MatrixXd ls = lower_cholesky(sys.elastic(), "elastic form");
  const Eigen::MatrixXd lr = lower_cholesky(sys.inertia(), "inertia form");
  const auto lr_tri = lr.triangularView<Eigen::Lower>();

  // Off-diagonal coupling X = L_S^T L_rho^{-T} = (L_rho^{-1} L_S)^T.
  const Eigen::MatrixXd y = lr_tri.solve(ls);
  // Viscous block L_rho^{-1} D L_rho^{-T}.
  const Eigen::MatrixXd z = lr_tri.solve(Eigen::MatrixXd(sys.viscous()));
  Eigen::MatrixXd dw = lr_tri.solve(z.transpose());
  dw = 0.5 * (dw + dw.transpose()).eval();

  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  b.topRightCorner(m, m) = y.transpose();
  b.bottomLeftCorner(m, m) = -y;
  b.bottomRightCorner(m, m) = -dw;
  return b;
}

SpectrumReport spectrum_of(const Eigen::MatrixXd& b) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(b, false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kSolver, "eigenvalue iteration did not converge");
  }
  SpectrumReport r;
  const Eigen::VectorXcd ev = es.eigenvalues();
  r.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  std::sort(r.eigenvalues.begin(), r.eigenvalues.end(),
            [](const auto& x, const auto& y) {
              if (x.imag() != y.imag()) return x.imag() < y.imag();
              return x.real() < y.real();
            });
  r.spectral_abscissa = -std::numeric_limits<double>::infinity();
  r.imaginary_axis_clearance = std::numeric_limits<double>::infinity();
  for (const auto& l : r.eigenvalues) {
    r.spectral_abscissa = std::max(r.spectral_abscissa, l.real());
    r.imaginary_axis_clearance =
        std::min(r.imaginary_axis_clearance, std::abs(l.real()));
    r.spectral_radius = std::max(r.spectral_radius, std::abs(l));
  }
  return r;
}

SpectrumReport spectrum(const GeneratorSystem& sys,
                        const SpectralOptions& options) {
  check_cap(sys, options);
  return spectrum_of(whitened_generator(sys));
}

ResolventOperator::ResolventOperator(const GeneratorSystem& sys,
                                     const SpectralOptions& options) {
  check_cap(sys, options);
  b_ = whitened_generator(sys);
  factor();
}

ResolventOperator::ResolventOperator(Eigen::MatrixXd whitened)
    : b_(std::move(whitened)) {
  if (b_.rows() != b_.cols() || b_.rows() == 0) {
    throw Error(ErrorCode::kInput, "whitened generator must be square");
  }
  factor();
}

void ResolventOperator::factor() {
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(b_.cast<std::complex<double>>(),
                                              false);
  if (schur.info() != Eigen::Success) {
    throw Error(ErrorCode::kSolver, "Schur iteration did not converge");
  }
  schur_t_ = schur.matrixT();
  const Eigen::Index n = schur_t_.rows();
  eigenvalues_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) eigenvalues_[i] = schur_t_(i, i);
  scale_ = b_.norm();
}

namespace {

using Complex = std::complex<double>;

// Solves (i omega - T) y = x for upper-triangular T, in place.
void shifted_solve(const Eigen::MatrixXcd& t, Complex shift, Eigen::VectorXcd& y) {
  const Eigen::Index n = t.rows();
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    y[j] /= shift - t(j, j);
    if (j > 0) y.head(j) += t.col(j).head(j) * y[j];
  }
}

// Solves (i omega - T)^* y = x, in place.
void shifted_adjoint_solve(const Eigen::MatrixXcd& t, Complex shift,
                           Eigen::VectorXcd& y) {
  const Eigen::Index n = t.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    Complex s = y[i];
    if (i > 0) s += t.col(i).head(i).dot(y.head(i));
    y[i] = s / std::conj(shift - t(i, i));
  }
}

}  // namespace

double ResolventOperator::try_norm(double omega) const {
  const Eigen::Index n = schur_t_.rows();
  const Complex shift(0.0, omega);
  const double tiny = kSingularRatio * (std::abs(omega) + scale_);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(shift - schur_t_(i, i)) <= tiny) {
      return std::numeric_limits<double>::infinity();
    }
  }

  // Lanczos with full reorthogonalization on H = Z^{-*} Z^{-1}, Z = i omega - T;
  // ||Z^{-1}||^2 is the largest eigenvalue of H.
  const int max_steps = static_cast<int>(std::min<Eigen::Index>(n, 120));
  Eigen::MatrixXcd q(n, max_steps + 1);
  std::vector<double> alpha, beta;
  {
    // Fixed deterministic start vector with no special structure.
    Eigen::VectorXcd q0(n);
    std::uint64_t state = 0x9E3779B97F4A7C15ull;
    for (Eigen::Index i = 0; i < n; ++i) {
      state = state * 6364136223846793005ull + 1442695040888963407ull;
      const double u = static_cast<double>(state >> 11) * 0x1.0p-53;
      q0[i] = Complex(0.5 + u, 0.25 * u);
    }
    q.col(0) = q0.normalized();
  }
  double theta = 0.0;
  for (int j = 0; j < max_steps; ++j) {
    Eigen::VectorXcd w = q.col(j);
    shifted_solve(schur_t_, shift, w);
    shifted_adjoint_solve(schur_t_, shift, w);
    const double a = q.col(j).dot(w).real();
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXcd c = q.leftCols(j + 1).adjoint() * w;
      w -= q.leftCols(j + 1) * c;
    }
    const double b = w.norm();

    const int m = j + 1;
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
    for (int k = 0; k < m; ++k) {
      tri(k, k) = alpha[k];
      if (k + 1 < m) tri(k, k + 1) = tri(k + 1, k) = beta[k];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
    theta = es.eigenvalues()[m - 1];
    const double last = std::abs(es.eigenvectors()(m - 1, m - 1));
    if (b * last <= 1e-14 * theta || b <= 1e-300) break;
    beta.push_back(b);
    q.col(j + 1) = w / b;
  }
  const double norm = std::sqrt(std::max(theta, 0.0));
  if (!(norm * (std::abs(omega) + scale_) < 1.0 / kSingularRatio)) {
    return std::numeric_limits<double>::infinity();
  }
  return norm;
}

double ResolventOperator::norm(double omega) const {
  const double r = try_norm(omega);
  if (!std::isfinite(r)) {
    const Complex shift(0.0, omega);
    Complex nearest = eigenvalues_.front();
    for (const auto& l : eigenvalues_) {
      if (std::abs(l - shift) < std::abs(nearest - shift)) nearest = l;
    }
    std::ostringstream os;
    os << "i*" << omega << " lies on the spectrum; nearest eigenvalue "
       << nearest.real() << (nearest.imag() < 0 ? "" : "+") << nearest.imag()
       << "i";
    throw Error(ErrorCode::kOnSpectrum, os.str());
  }
  return r;
}

double resolvent_norm(const GeneratorSystem& sys, double omega) {
  return ResolventOperator(sys).norm(omega);
}

double resolved_omega_max(const GeneratorSystem& sys) {
  return sys.params().wave_speed() * (sys.mesh().n_elements / 4.0) *
         std::numbers::pi;
}

std::vector<double> log_grid(double lo, double hi, int points) {
  std::vector<double> g(points);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int k = 0; k < points; ++k) {
    g[k] = points == 1 ? lo : std::exp(a + (b - a) * k / (points - 1));
  }
  if (points > 1) {
    g.front() = lo;
    g.back() = hi;
  }
  return g;
}

ExponentFit fit_log_log(const std::vector<double>& x,
                        const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kFit, "fit abscissae and ordinates differ in length");
  }
  const int n = static_cast<int>(x.size());
  if (n < 2) throw Error(ErrorCode::kFit, "fit needs at least two points");
  std::vector<double> lx(n), ly(n);
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) ||
        !std::isfinite(y[i])) {
      throw Error(ErrorCode::kFit, "log-log fit needs positive finite data");
    }
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::kFit, "degenerate fit abscissae");
  ExponentFit f;
  f.exponent = sxy / sxx;
  f.intercept = my - f.exponent * mx;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = ly[i] - (f.intercept + f.exponent * lx[i]);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  f.points = n;
  return f;
}

namespace {

void collect_fit_points(const ResolventSweep& sweep, std::vector<double>& x,
                        std::vector<double>& y) {
  if (!sweep.peak_omegas.empty()) {
    for (std::size_t k = 0; k < sweep.peak_omegas.size(); ++k) {
      const double w = sweep.peak_omegas[k];
      if (w < sweep.fit_lo || w > sweep.fit_hi) continue;
      x.push_back(w);
      y.push_back(sweep.peak_norms[k]);
    }
    return;
  }
  for (std::size_t k = 0; k < sweep.omegas.size(); ++k) {
    const double w = sweep.omegas[k];
    if (w < sweep.fit_lo || w > sweep.fit_hi) continue;
    if (sweep.rejected[k] || !std::isfinite(sweep.norms[k])) continue;
    x.push_back(w);
    y.push_back(sweep.norms[k]);
  }
}

void finish_sweep(ResolventSweep& sweep) {
  std::vector<double> x, y;
  collect_fit_points(sweep, x, y);
  if (x.size() >= 8) {
    const ExponentFit f = fit_log_log(x, y);
    sweep.fitted_beta = f.exponent;
    sweep.fit_residual = f.residual;
  } else {
    sweep.fitted_beta = std::numeric_limits<double>::quiet_NaN();
    sweep.fit_residual = std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

ResolventSweep make_sweep(std::vector<double> omegas, std::vector<double> norms,
                          double fit_lo, double fit_hi) {
  if (omegas.size() != norms.size()) {
    throw Error(ErrorCode::kInput, "omega and norm arrays differ in length");
  }
  ResolventSweep s;
  s.omegas = std::move(omegas);
  s.norms = std::move(norms);
  s.rejected.assign(s.omegas.size(), false);
  s.spikes.assign(s.omegas.size(), false);
  s.fit_lo = fit_lo;
  s.fit_hi = fit_hi;
  s.resolved_omega_max = fit_hi;
  finish_sweep(s);
  return s;
}

ResolventSweep resolvent_sweep(const GeneratorSystem& sys, double omega_lo,
                               double omega_hi, int points,
                               const SweepOptions& options) {
  const ResolventOperator op(sys, options.spectral);
  return resolvent_sweep(op, resolved_omega_max(sys), omega_lo, omega_hi,
                         points, options);
}

ResolventSweep resolvent_sweep(const ResolventOperator& op, double resolved_max,
                               double omega_lo, double omega_hi, int points,
                               const SweepOptions& options) {
  if (!(omega_lo > 0.0) || !(omega_hi > omega_lo)) {
    throw Error(ErrorCode::kConfiguration, "sweep needs 0 < omega_lo < omega_hi");
  }
  if (points < 8) {
    throw Error(ErrorCode::kConfiguration, "sweep needs at least 8 points");
  }
  ResolventSweep sweep;
  sweep.resolved_omega_max = resolved_max;
  sweep.fit_lo = omega_lo;
  sweep.fit_hi = std::min(omega_hi, resolved_max);
  if (!(sweep.fit_hi > sweep.fit_lo)) {
    std::ostringstream os;
    os << "fit range is empty: the mesh resolves omega <= " << resolved_max
       << "; refine the mesh";
    throw Error(ErrorCode::kConfiguration, os.str());
  }
  sweep.omegas = log_grid(omega_lo, omega_hi, points);
  const std::size_t np = sweep.omegas.size();
  sweep.norms.assign(np, std::numeric_limits<double>::quiet_NaN());
  sweep.rejected.assign(np, false);
  sweep.spikes.assign(np, false);

  double radius = 0.0;
  for (const auto& l : op.eigenvalues()) radius = std::max(radius, std::abs(l));
  // Eigenvalues of a skew matrix carry real parts at the level of
  // roundoff times the spectral radius.
  auto on_axis = [&](const std::complex<double>& l) {
    return std::abs(l.real()) <= kAxisRoundoff * radius;
  };

  // Frequencies too close to an eigenvalue sitting on the axis are skipped
  // rather than reported as huge numbers.
  for (std::size_t k = 0; k < np; ++k) {
    const std::complex<double> shift(0.0, sweep.omegas[k]);
    for (const auto& l : op.eigenvalues()) {
      if (on_axis(l) && std::abs(l - shift) <= options.guard_band * sweep.omegas[k]) {
        sweep.rejected[k] = true;
        break;
      }
    }
  }

  // Candidate frequencies for the bin suprema: resonances strictly inside a
  // bin whose eigenvalue is closer to the axis than the bin is wide.
  std::vector<std::vector<double>> candidates(np > 0 ? np - 1 : 0);
  for (const auto& l : op.eigenvalues()) {
    if (on_axis(l) || l.imag() <= omega_lo || l.imag() >= omega_hi) continue;
    const auto it = std::upper_bound(sweep.omegas.begin(), sweep.omegas.end(),
                                     l.imag());
    const std::size_t bin = static_cast<std::size_t>(it - sweep.omegas.begin()) - 1;
    if (bin >= candidates.size()) continue;
    const double width = sweep.omegas[bin + 1] - sweep.omegas[bin];
    if (-l.real() < width) candidates[bin].push_back(l.imag());
  }
  for (auto& c : candidates) std::sort(c.begin(), c.end());

  // Flatten all evaluations so they can be distributed over workers.
  std::vector<double> evals;
  for (std::size_t k = 0; k < np; ++k) evals.push_back(sweep.omegas[k]);
  for (const auto& c : candidates) evals.insert(evals.end(), c.begin(), c.end());
  std::vector<double> values(evals.size(), std::numeric_limits<double>::quiet_NaN());
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t k = first; k < evals.size(); k += stride) {
      if (k < np && sweep.rejected[k]) continue;
      values[k] = op.try_norm(evals[k]);
    }
  };
  const std::size_t threads =
      static_cast<std::size_t>(std::max(1, options.threads));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }

  for (std::size_t k = 0; k < np; ++k) {
    if (sweep.rejected[k]) continue;
    if (!std::isfinite(values[k])) {
      sweep.rejected[k] = true;
      sweep.spikes[k] = true;
      continue;
    }
    sweep.norms[k] = values[k];
  }
  // A point far above both neighbours is a resonance peak.
  for (std::size_t k = 1; k + 1 < np; ++k) {
    const double a = sweep.norms[k - 1], b = sweep.norms[k], c = sweep.norms[k + 1];
    if (std::isfinite(a) && std::isfinite(b) && std::isfinite(c) &&
        b > 100.0 * std::sqrt(a * c)) {
      sweep.spikes[k] = true;
    }
  }

  bool any_damping = false;
  for (const auto& l : op.eigenvalues()) any_damping |= !on_axis(l);
  if (any_damping) {
    std::size_t next = np;
    for (std::size_t bin = 0; bin < candidates.size(); ++bin) {
      double best_w = 0.0, best = -1.0;
      auto consider = [&](double w, double v) {
        if (std::isfinite(v) && v > best) {
          best = v;
          best_w = w;
        }
      };
      consider(sweep.omegas[bin], sweep.norms[bin]);
      consider(sweep.omegas[bin + 1], sweep.norms[bin + 1]);
      for (double w : candidates[bin]) consider(w, values[next++]);
      if (best > 0.0) {
        sweep.peak_omegas.push_back(best_w);
        sweep.peak_norms.push_back(best);
      }
    }
  }
  finish_sweep(sweep);
  return sweep;
}

ExponentFit fit_resolvent_exponent(const ResolventSweep& sweep) {
  std::vector<double> x, y;
  collect_fit_points(sweep, x, y);
  if (x.size() < 8) {
    std::ostringstream os;
    os << "resolvent fit needs >= 8 points in [" << sweep.fit_lo << ", "
       << sweep.fit_hi << "], have " << x.size();
    throw Error(ErrorCode::kFit, os.str());
  }
  return fit_log_log(x, y);
}

BoundednessCertificate boundedness_certificate(const ResolventSweep& sweep,
                                               double beta) {
  std::vector<double> x, y;
  collect_fit_points(sweep, x, y);
  BoundednessCertificate c;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double v = std::pow(x[k], -beta) * y[k];
    if (v > c.value) {
      c.value = v;
      c.argmax = x[k];
    }
  }
  return c;
}

void write_sweep_csv(const ResolventSweep& sweep, std::ostream& os) {
  os << "omega,resolvent_norm,omega^-2*norm,kind\n";
  char buf[128];
  auto row = [&](double w, double v, const char* kind) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%s\n", w, v, v / (w * w),
                  kind);
    os << buf;
  };
  for (std::size_t k = 0; k < sweep.omegas.size(); ++k) {
    row(sweep.omegas[k], sweep.norms[k], sweep.rejected[k] ? "rejected" : "grid");
  }
  for (std::size_t k = 0; k < sweep.peak_omegas.size(); ++k) {
    row(sweep.peak_omegas[k], sweep.peak_norms[k], "peak");
  }
}

ResolventSweep read_sweep_csv(std::istream& is, double fit_lo, double fit_hi) {
  std::string line;
  if (!std::getline(is, line) || line != "omega,resolvent_norm,omega^-2*norm,kind") {
    throw Error(ErrorCode::kInput, "sweep CSV header missing");
  }
  ResolventSweep s;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string f[4];
    for (auto& x : f) std::getline(ls, x, ',');
    if (f[3].empty()) {
      throw Error(ErrorCode::kInput,
                  "malformed sweep CSV line " + std::to_string(lineno));
    }
    const double w = std::strtod(f[0].c_str(), nullptr);
    const double v = std::strtod(f[1].c_str(), nullptr);
    if (f[3] == "peak") {
      s.peak_omegas.push_back(w);
      s.peak_norms.push_back(v);
    } else {
      s.omegas.push_back(w);
      s.norms.push_back(v);
      s.rejected.push_back(f[3] == "rejected");
      s.spikes.push_back(false);
    }
  }
  s.fit_lo = fit_lo;
  s.fit_hi = fit_hi;
  s.resolved_omega_max = fit_hi;
  finish_sweep(s);
  return s;
}

void write_spectrum_csv(const SpectrumReport& report, std::ostream& os) {
  os << "re,im\n";
  char buf[96];
  for (const auto& l : report.eigenvalues) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", l.real(), l.imag());
    os << buf;
  }
}

SpectrumReport read_spectrum_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "re,im") {
    throw Error(ErrorCode::kInput, "spectrum CSV header missing");
  }
  SpectrumReport r;
  r.spectral_abscissa = -std::numeric_limits<double>::infinity();
  r.imaginary_axis_clearance = std::numeric_limits<double>::infinity();
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    double re = 0.0, im = 0.0;
    if (std::sscanf(line.c_str(), "%lf,%lf", &re, &im) != 2) {
      throw Error(ErrorCode::kInput, "malformed spectrum CSV line");
    }
    const std::complex<double> l(re, im);
    r.eigenvalues.push_back(l);
    r.spectral_abscissa = std::max(r.spectral_abscissa, re);
    r.imaginary_axis_clearance = std::min(r.imaginary_axis_clearance, std::abs(re));
    r.spectral_radius = std::max(r.spectral_radius, std::abs(l));
  }
  return r;
}

}  // namespace kvbeam
