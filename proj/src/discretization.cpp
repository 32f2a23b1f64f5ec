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

#include "kvbeam/discretization.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "kvbeam/error.hpp"

namespace kvbeam {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

constexpr std::array<double, 4> kGaussNodes = {
    -0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
    0.8611363115940526};
constexpr std::array<double, 4> kGaussWeights = {
    0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
    0.3478548451374538};

// Moments of a coefficient against the two hat functions of one element:
// m0 = int D, m1[a] = int D N_a, m2[a][b] = int D N_a N_b.
struct ElementMoments {
  double m0 = 0.0;
  std::array<double, 2> m1{};
  std::array<std::array<double, 2>, 2> m2{};
};

void accumulate_panel(const DampingProfile& profile, double x0, double h,
                      double lo, double hi, ElementMoments& out) {
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  for (int q = 0; q < 4; ++q) {
    const double x = mid + half * kGaussNodes[q];
    const double wq = half * kGaussWeights[q] * profile.a(x);
    const std::array<double, 2> n = {(x0 + h - x) / h, (x - x0) / h};
    out.m0 += wq;
    for (int a = 0; a < 2; ++a) {
      out.m1[a] += wq * n[a];
      for (int b = 0; b < 2; ++b) out.m2[a][b] += wq * n[a] * n[b];
    }
  }
}

// The element whose left node is x = 0 carries the kink of a(x) = c x^gamma;
// it is split into three panels graded toward 0.
ElementMoments damping_moments(const DampingProfile& profile, double x0,
                               double h) {
  ElementMoments m;
  if (profile.is_vanishing() || x0 + h <= 0.0) return m;
  if (x0 == 0.0) {
    accumulate_panel(profile, x0, h, 0.0, h / 16.0, m);
    accumulate_panel(profile, x0, h, h / 16.0, h / 4.0, m);
    accumulate_panel(profile, x0, h, h / 4.0, h, m);
  } else {
    accumulate_panel(profile, x0, h, x0, x0 + h, m);
  }
  return m;
}

void add(Triplets& t, int row, int col, double value, int row_off = 0,
         int col_off = 0) {
  if (row < 0 || col < 0 || value == 0.0) return;
  t.emplace_back(row + row_off, col + col_off, value);
}

SparseMatrix from_triplets(int rows, int cols, const Triplets& t) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

// Appends the entries of src scaled by s at block offset (r, c).
void append_block(Triplets& t, const SparseMatrix& src, int r, int c,
                  double s = 1.0) {
  for (int k = 0; k < src.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(src, k); it; ++it) {
      t.emplace_back(static_cast<int>(it.row()) + r,
                     static_cast<int>(it.col()) + c, s * it.value());
    }
  }
}

}  // namespace

Mesh build_mesh(int n_elements) {
  if (n_elements < 4 || n_elements % 2 != 0) {
    std::ostringstream os;
    os << "mesh needs an even element count >= 4 (x = 0 must be a node), got "
       << n_elements;
    throw Error(ErrorCode::kConfiguration, os.str());
  }
  Mesh mesh;
  mesh.n_elements = n_elements;
  mesh.nodes.resize(n_elements + 1);
  const int half = n_elements / 2;
  for (int i = 0; i <= n_elements; ++i) {
    mesh.nodes[i] = static_cast<double>(i - half) / half;
  }
  return mesh;
}

DiscreteState DiscreteState::zero(int block_size) {
  DiscreteState s;
  s.w = s.phi = s.v = s.psi = Eigen::VectorXd::Zero(block_size);
  return s;
}

DiscreteState DiscreteState::from_stacked(const Eigen::VectorXd& u) {
  if (u.size() % 4 != 0) {
    throw Error(ErrorCode::kInput, "stacked state length must be 4N");
  }
  const Eigen::Index n = u.size() / 4;
  DiscreteState s;
  s.w = u.segment(0, n);
  s.phi = u.segment(n, n);
  s.v = u.segment(2 * n, n);
  s.psi = u.segment(3 * n, n);
  return s;
}

Eigen::VectorXd DiscreteState::stacked() const {
  const Eigen::Index n = w.size();
  if (phi.size() != n || v.size() != n || psi.size() != n) {
    throw Error(ErrorCode::kInput, "state blocks have different lengths");
  }
  Eigen::VectorXd u(4 * n);
  u << w, phi, v, psi;
  return u;
}

GeneratorSystem assemble_generator(const Mesh& mesh,
                                   const BeamParameters& params,
                                   const DampingConfiguration& damping,
                                   const AssemblyOptions& options) {
  params.validate();
  if (mesh.n_elements < 4 || mesh.n_elements % 2 != 0 ||
      static_cast<int>(mesh.nodes.size()) != mesh.n_elements + 1) {
    throw Error(ErrorCode::kConfiguration, "malformed mesh");
  }
  if (damping.shear.side() != DampingSide::kShear ||
      damping.bending.side() != DampingSide::kBending) {
    throw Error(ErrorCode::kConfiguration,
                "damping profiles assigned to the wrong side");
  }
  if (options.enforce_hypotheses) {
    validate_hypotheses(damping.shear);
    validate_hypotheses(damping.bending);
  }

  const int n = mesh.interior_count();
  const bool reduced = options.shear == ShearIntegration::kReduced;
  Triplets mass, stiff, coup, shear_mass, kd1, cd1, md1, kd2;
  for (int e = 0; e < mesh.n_elements; ++e) {
    const double x0 = mesh.nodes[e];
    const double h = mesh.nodes[e + 1] - x0;
    const std::array<int, 2> dofs = {mesh.dof(e), mesh.dof(e + 1)};
    const std::array<double, 2> slope = {-1.0 / h, 1.0 / h};

    const ElementMoments d1 = damping_moments(damping.shear, x0, h);
    const ElementMoments d2 = damping_moments(damping.bending, x0, h);

    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        const int i = dofs[a];
        const int j = dofs[b];
        const double m_ab = h * (a == b ? 2.0 : 1.0) / 6.0;
        add(mass, i, j, m_ab);
        add(stiff, i, j, slope[a] * slope[b] * h);
        // int N_a' N_b = slope_a * h / 2 under either rule.
        add(coup, i, j, slope[a] * 0.5 * h);
        add(shear_mass, i, j, reduced ? 0.25 * h : m_ab);
        add(kd1, i, j, slope[a] * slope[b] * d1.m0);
        add(cd1, i, j, slope[a] * (reduced ? 0.5 * d1.m0 : d1.m1[b]));
        add(md1, i, j, reduced ? 0.25 * d1.m0 : d1.m2[a][b]);
        add(kd2, i, j, slope[a] * slope[b] * d2.m0);
      }
    }
  }

  GeneratorSystem sys;
  sys.mesh_ = mesh;
  sys.shear_ = options.shear;
  sys.params_ = params;
  sys.damping_ = damping;
  sys.mass_ = from_triplets(n, n, mass);
  sys.stiffness_ = from_triplets(n, n, stiff);
  sys.coupling_ = from_triplets(n, n, coup);
  sys.shear_mass_ = from_triplets(n, n, shear_mass);
  const SparseMatrix k_d1 = from_triplets(n, n, kd1);
  const SparseMatrix c_d1 = from_triplets(n, n, cd1);
  const SparseMatrix m_d1 = from_triplets(n, n, md1);
  const SparseMatrix k_d2 = from_triplets(n, n, kd2);

  const double k1 = params.kappa1;
  const double k2 = params.kappa2;

  Triplets t;
  append_block(t, sys.stiffness_, 0, 0, k1);
  append_block(t, sys.coupling_, 0, n, k1);
  append_block(t, SparseMatrix(sys.coupling_.transpose()), n, 0, k1);
  append_block(t, sys.stiffness_, n, n, k2);
  append_block(t, sys.shear_mass_, n, n, k1);
  sys.elastic_ = from_triplets(2 * n, 2 * n, t);

  t.clear();
  append_block(t, k_d1, 0, 0);
  append_block(t, c_d1, 0, n);
  append_block(t, SparseMatrix(c_d1.transpose()), n, 0);
  append_block(t, k_d2, n, n);
  append_block(t, m_d1, n, n);
  sys.viscous_ = from_triplets(2 * n, 2 * n, t);

  t.clear();
  append_block(t, sys.mass_, 0, 0, params.rho1);
  append_block(t, sys.mass_, n, n, params.rho2);
  sys.inertia_ = from_triplets(2 * n, 2 * n, t);

  t.clear();
  append_block(t, sys.elastic_, 0, 0);
  append_block(t, sys.inertia_, 2 * n, 2 * n);
  sys.gram_ = from_triplets(4 * n, 4 * n, t);

  t.clear();
  append_block(t, sys.mass_, 0, 0);
  append_block(t, sys.mass_, n, n);
  append_block(t, sys.inertia_, 2 * n, 2 * n);
  sys.lhs_ = from_triplets(4 * n, 4 * n, t);

  t.clear();
  append_block(t, sys.mass_, 0, 2 * n);
  append_block(t, sys.mass_, n, 3 * n);
  append_block(t, sys.elastic_, 2 * n, 0, -1.0);
  append_block(t, sys.viscous_, 2 * n, 2 * n, -1.0);
  sys.rhs_ = from_triplets(4 * n, 4 * n, t);

  auto factor = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(sys.lhs_);
  if (factor->info() != Eigen::Success) {
    throw Error(ErrorCode::kSolver, "mass matrix factorization failed");
  }
  sys.lhs_factor_ = std::move(factor);
  return sys;
}

Eigen::VectorXd GeneratorSystem::apply(const Eigen::VectorXd& u) const {
  if (u.size() != dimension()) {
    throw Error(ErrorCode::kInput, "state dimension does not match system");
  }
  Eigen::VectorXd y = lhs_factor_->solve(rhs_ * u);
  if (lhs_factor_->info() != Eigen::Success) {
    throw Error(ErrorCode::kSolver, "mass solve failed");
  }
  return y;
}

double GeneratorSystem::viscous_power(const Eigen::VectorXd& u) const {
  const int n = block_size();
  const Eigen::VectorXd vel = u.segment(2 * n, 2 * n);
  return vel.dot(viscous_ * vel);
}

DiscreteState apply_generator(const GeneratorSystem& sys,
                              const DiscreteState& u) {
  return DiscreteState::from_stacked(sys.apply(u.stacked()));
}

double h_norm(const GeneratorSystem& sys, const Eigen::VectorXd& u) {
  if (u.size() != sys.dimension()) {
    throw Error(ErrorCode::kInput, "state dimension does not match system");
  }
  return std::sqrt(std::max(0.0, u.dot(sys.gram() * u)));
}

double h_norm(const GeneratorSystem& sys, const DiscreteState& u) {
  return h_norm(sys, u.stacked());
}

GraphNormReport graph_norm(const GeneratorSystem& sys, const DiscreteState& u) {
  const Eigen::VectorXd x = u.stacked();
  GraphNormReport r;
  r.h_norm = h_norm(sys, x);
  r.a_image_norm = h_norm(sys, sys.apply(x));
  r.graph_norm = r.h_norm + r.a_image_norm;
  return r;
}

DiscreteState interpolate(const Mesh& mesh, const ContinuousState& state) {
  state.check_boundary(1e-10);
  const int n = mesh.interior_count();
  DiscreteState s = DiscreteState::zero(n);
  for (int i = 1; i < mesh.n_elements; ++i) {
    const double x = mesh.nodes[i];
    const int d = mesh.dof(i);
    s.w[d] = state.w.value(x);
    s.phi[d] = state.phi.value(x);
    s.v[d] = state.v.value(x);
    s.psi[d] = state.psi.value(x);
  }
  return s;
}

void export_triplets(const SparseMatrix& m, std::ostream& os) {
  char buf[64];
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%.17g", it.value());
      os << it.row() << ' ' << it.col() << ' ' << buf << '\n';
    }
  }
}

}  // namespace kvbeam
