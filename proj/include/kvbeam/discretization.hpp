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
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "kvbeam/model.hpp"

namespace kvbeam {

// Uniform partition of [-1, 1]. The element count is even so that x = 0 is a
// node and the damping support boundary is aligned with the mesh.
struct Mesh {
  int n_elements = 0;
  std::vector<double> nodes;

  int interior_count() const noexcept { return n_elements - 1; }
  double width() const noexcept { return 2.0 / n_elements; }
  // Degree of freedom for node i, or -1 for the Dirichlet nodes.
  int dof(int node) const noexcept {
    return (node <= 0 || node >= n_elements) ? -1 : node - 1;
  }
};

Mesh build_mesh(int n_elements);

// Nodal coefficients of (w, phi, v, psi) on the interior nodes.
struct DiscreteState {
  Eigen::VectorXd w;
  Eigen::VectorXd phi;
  Eigen::VectorXd v;
  Eigen::VectorXd psi;

  static DiscreteState zero(int block_size);
  static DiscreteState from_stacked(const Eigen::VectorXd& u);

  int block_size() const noexcept { return static_cast<int>(w.size()); }
  Eigen::VectorXd stacked() const;
};

using SparseMatrix = Eigen::SparseMatrix<double>;

// How the shear strain w' + phi is integrated. kReduced evaluates phi at the
// element midpoint, so the strain is piecewise constant; this removes shear
// locking of the P1 pair. kConsistent integrates the P1 fields exactly.
enum class ShearIntegration { kReduced, kConsistent };

struct AssemblyOptions {
  // When false, damping profiles outside the degeneracy hypotheses are
  // assembled anyway (exploratory runs).
  bool enforce_hypotheses = true;
  ShearIntegration shear = ShearIntegration::kReduced;
};

// Semidiscrete generator E dU/dt = G U in the stacked ordering (w, phi, v, psi).
//
//   E    = diag(M, M, rho1 M, rho2 M)
//   G    = [[0, diag(M, M)], [-S, -D]]
//   gram = diag(S, rho1 M, rho2 M)
//
// with S the elastic form kappa1 (w'+phi)^2 + kappa2 phi'^2 and D the
// Kelvin-Voigt form D1 (v'+psi)^2 + D2 psi'^2.
class GeneratorSystem {
 public:
  const Mesh& mesh() const noexcept { return mesh_; }
  ShearIntegration shear_integration() const noexcept { return shear_; }
  const BeamParameters& params() const noexcept { return params_; }
  const DampingConfiguration& damping() const noexcept { return damping_; }

  int block_size() const noexcept { return mesh_.interior_count(); }
  int dimension() const noexcept { return 4 * block_size(); }

  const SparseMatrix& gram() const noexcept { return gram_; }
  const SparseMatrix& lhs() const noexcept { return lhs_; }
  const SparseMatrix& rhs() const noexcept { return rhs_; }

  // Scalar P1 blocks on the interior nodes: mass int N_i N_j, stiffness
  // int N_i' N_j', coupling int N_i' N_j and the phi-phi part of the shear
  // form (equal to mass() for consistent integration).
  const SparseMatrix& mass() const noexcept { return mass_; }
  const SparseMatrix& stiffness() const noexcept { return stiffness_; }
  const SparseMatrix& coupling() const noexcept { return coupling_; }
  const SparseMatrix& shear_mass() const noexcept { return shear_mass_; }

  // 2N x 2N blocks over (w, phi) resp. (v, psi).
  const SparseMatrix& elastic() const noexcept { return elastic_; }
  const SparseMatrix& viscous() const noexcept { return viscous_; }
  const SparseMatrix& inertia() const noexcept { return inertia_; }

  // Solves E y = G u.
  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;

  // Kelvin-Voigt rate [v;psi]^T D [v;psi], the discrete dissipation density.
  double viscous_power(const Eigen::VectorXd& u) const;

 private:
  friend GeneratorSystem assemble_generator(const Mesh&, const BeamParameters&,
                                            const DampingConfiguration&,
                                            const AssemblyOptions&);
  GeneratorSystem() = default;

  Mesh mesh_;
  ShearIntegration shear_ = ShearIntegration::kReduced;
  BeamParameters params_;
  DampingConfiguration damping_;
  SparseMatrix mass_, stiffness_, coupling_, shear_mass_;
  SparseMatrix elastic_, viscous_, inertia_;
  SparseMatrix gram_, lhs_, rhs_;
  std::shared_ptr<const Eigen::SimplicialLDLT<SparseMatrix>> lhs_factor_;
};

GeneratorSystem assemble_generator(const Mesh& mesh,
                                   const BeamParameters& params,
                                   const DampingConfiguration& damping,
                                   const AssemblyOptions& options = {});

DiscreteState apply_generator(const GeneratorSystem& sys,
                              const DiscreteState& u);

double h_norm(const GeneratorSystem& sys, const DiscreteState& u);
double h_norm(const GeneratorSystem& sys, const Eigen::VectorXd& u);

struct GraphNormReport {
  double h_norm = 0.0;
  double a_image_norm = 0.0;
  double graph_norm = 0.0;
};

GraphNormReport graph_norm(const GeneratorSystem& sys, const DiscreteState& u);

DiscreteState interpolate(const Mesh& mesh, const ContinuousState& state);

// One "row col value" line per stored entry, zero-based indices.
void export_triplets(const SparseMatrix& m, std::ostream& os);

}  // namespace kvbeam
