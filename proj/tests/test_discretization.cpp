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

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "kvbeam/discretization.hpp"
#include "kvbeam/error.hpp"

using namespace kvbeam;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using std::numbers::pi;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::kIo;
}

double max_abs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

DampingConfiguration shear_root() {
  DampingConfiguration d;
  d.shear = DampingProfile::power_law(DampingSide::kShear, 1.0, 0.5);
  return d;
}

DampingConfiguration bending_root() {
  DampingConfiguration d;
  d.bending = DampingProfile::power_law(DampingSide::kBending, 1.0, 0.5);
  return d;
}

VectorXd random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

// Dense generator A = E^{-1} G.
MatrixXd dense_generator(const GeneratorSystem& sys) {
  return MatrixXd(sys.lhs()).lu().solve(MatrixXd(sys.rhs()));
}

ContinuousState smooth_state() {
  ContinuousState s;
  s.w = Field{[](double x) { return std::sin(pi * x); },
              [](double x) { return pi * std::cos(pi * x); }};
  s.phi = Field{[](double x) { return 1 - x * x; }, [](double x) { return -2 * x; }};
  s.v = Field{[](double x) { return std::sin(2 * pi * x) * 0.5; },
              [](double x) { return pi * std::cos(2 * pi * x); }};
  s.psi = Field{[](double x) { return x * (1 - x * x); },
                [](double x) { return 1 - 3 * x * x; }};
  return s;
}

}  // namespace

TEST_CASE("uniform meshes") {
  const Mesh m4 = build_mesh(4);
  REQUIRE(m4.nodes.size() == 5);
  const double expected[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  for (int i = 0; i < 5; ++i) CHECK(m4.nodes[i] == expected[i]);
  CHECK(m4.interior_count() == 3);
  CHECK(m4.dof(0) == -1);
  CHECK(m4.dof(2) == 1);
  CHECK(m4.dof(4) == -1);

  const Mesh m8 = build_mesh(8);
  CHECK(m8.width() == 0.25);
  CHECK(m8.nodes[4] == 0.0);

  CHECK(code_of([] { build_mesh(5); }) == ErrorCode::kConfiguration);
  CHECK(code_of([] { build_mesh(2); }) == ErrorCode::kConfiguration);
}

TEST_CASE("hand-assembled blocks on four elements") {
  const double h = 0.5;
  MatrixXd k(3, 3), m(3, 3), c(3, 3), ms(3, 3);
  k << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  k /= h;
  m << 4, 1, 0, 1, 4, 1, 0, 1, 4;
  m *= h / 6;
  // int N_i' N_j: +1/2 below the diagonal, -1/2 above.
  c << 0, -0.5, 0, 0.5, 0, -0.5, 0, 0.5, 0;
  // One-point shear rule: h/4 on every pair sharing an element.
  ms << 2, 1, 0, 1, 2, 1, 0, 1, 2;
  ms *= h / 4;

  // Damping moments of sqrt(x) on [0, 1/2] and [1/2, 1].
  const double m0a = 2.0 / 3.0 * std::pow(0.5, 1.5);
  const double m0b = 2.0 / 3.0 * (1.0 - std::pow(0.5, 1.5));

  SUBCASE("shear damping, reduced shear integration") {
    const auto sys = assemble_generator(build_mesh(4), BeamParameters{}, shear_root());
    CHECK(max_abs(MatrixXd(sys.stiffness()) - k) < 1e-14);
    CHECK(max_abs(MatrixXd(sys.mass()) - m) < 1e-14);
    CHECK(max_abs(MatrixXd(sys.coupling()) - c) < 1e-14);
    CHECK(max_abs(MatrixXd(sys.shear_mass()) - ms) < 1e-14);

    MatrixXd s(6, 6);
    s << k, c, c.transpose(), k + ms;
    CHECK(max_abs(MatrixXd(sys.elastic()) - s) < 1e-14);

    MatrixXd kd = MatrixXd::Zero(3, 3), cd = MatrixXd::Zero(3, 3),
             md = MatrixXd::Zero(3, 3);
    // Element [0, 1/2] couples dofs 1 and 2; [1/2, 1] touches dof 2 only.
    kd(1, 1) = 4 * m0a;
    kd(1, 2) = kd(2, 1) = -4 * m0a;
    kd(2, 2) = 4 * (m0a + m0b);
    cd(1, 1) = -m0a;
    cd(1, 2) = -m0a;
    cd(2, 1) = m0a;
    cd(2, 2) = m0a - m0b;
    md(1, 1) = m0a / 4;
    md(1, 2) = md(2, 1) = m0a / 4;
    md(2, 2) = (m0a + m0b) / 4;
    MatrixXd d(6, 6);
    d << kd, cd, cd.transpose(), md;
    // The element rule (4-point Gauss, three graded panels next to x = 0)
    // integrates sqrt(x) times the hat functions to about 5e-5 relative accuracy
    // on that element.
    CHECK(max_abs(MatrixXd(sys.viscous()) - d) < 1e-4 * max_abs(d));
    CHECK(MatrixXd(sys.viscous()).row(0).norm() == 0.0);

    MatrixXd e = MatrixXd::Zero(12, 12);
    e.block(0, 0, 3, 3) = m;
    e.block(3, 3, 3, 3) = m;
    e.block(6, 6, 3, 3) = m;
    e.block(9, 9, 3, 3) = m;
    MatrixXd g = MatrixXd::Zero(12, 12);
    g.block(0, 6, 3, 3) = m;
    g.block(3, 9, 3, 3) = m;
    g.block(6, 0, 6, 6) = -s;
    g.block(6, 6, 6, 6) = -MatrixXd(sys.viscous());
    MatrixXd gram = MatrixXd::Zero(12, 12);
    gram.block(0, 0, 6, 6) = s;
    gram.block(6, 6, 3, 3) = m;
    gram.block(9, 9, 3, 3) = m;
    CHECK(max_abs(MatrixXd(sys.lhs()) - e) < 1e-14);
    CHECK(max_abs(MatrixXd(sys.rhs()) - g) < 1e-14);
    CHECK(max_abs(MatrixXd(sys.gram()) - gram) < 1e-14);
  }

  SUBCASE("bending damping, consistent shear integration") {
    AssemblyOptions opts;
    opts.shear = ShearIntegration::kConsistent;
    BeamParameters p{2.0, 3.0, 5.0, 7.0};
    const auto sys = assemble_generator(build_mesh(4), p, bending_root(), opts);
    CHECK(max_abs(MatrixXd(sys.shear_mass()) - m) < 1e-14);
    MatrixXd s(6, 6);
    s << 5 * k, 5 * c, 5 * c.transpose(), 7 * k + 5 * m;
    CHECK(max_abs(MatrixXd(sys.elastic()) - s) < 1e-13);
    MatrixXd kd = MatrixXd::Zero(3, 3);
    kd(1, 1) = 4 * m0a;
    kd(1, 2) = kd(2, 1) = -4 * m0a;
    kd(2, 2) = 4 * (m0a + m0b);
    MatrixXd d = MatrixXd::Zero(6, 6);
    d.block(3, 3, 3, 3) = kd;
    CHECK(max_abs(MatrixXd(sys.viscous()) - d) < 1e-4 * max_abs(d));
    MatrixXd inertia = MatrixXd::Zero(6, 6);
    inertia.block(0, 0, 3, 3) = 2 * m;
    inertia.block(3, 3, 3, 3) = 3 * m;
    CHECK(max_abs(MatrixXd(sys.inertia()) - inertia) < 1e-14);
  }

  SUBCASE("consistent shear damping moments against direct integration") {
    AssemblyOptions opts;
    opts.shear = ShearIntegration::kConsistent;
    const auto sys = assemble_generator(build_mesh(4), BeamParameters{}, shear_root(), opts);
    auto moment = [](double x0, auto weight) {
      return integrate_graded(
          [=](double x) { return std::sqrt(x) * weight(x); }, x0, x0 + 0.5);
    };
    // Hat functions on [0, 1/2]: dof 1 falls, dof 2 rises; on [1/2, 1] dof 2 falls.
    auto fall0 = [](double x) { return (0.5 - x) / 0.5; };
    auto rise0 = [](double x) { return x / 0.5; };
    auto fall1 = [](double x) { return (1.0 - x) / 0.5; };
    MatrixXd md = MatrixXd::Zero(3, 3);
    md(1, 1) = moment(0.0, [&](double x) { return fall0(x) * fall0(x); });
    md(1, 2) = md(2, 1) = moment(0.0, [&](double x) { return fall0(x) * rise0(x); });
    md(2, 2) = moment(0.0, [&](double x) { return rise0(x) * rise0(x); }) +
               moment(0.5, [&](double x) { return fall1(x) * fall1(x); });
    MatrixXd cd = MatrixXd::Zero(3, 3);
    // Row: derivative of the v hat; column: psi hat.
    cd(1, 1) = -2 * moment(0.0, fall0);
    cd(1, 2) = -2 * moment(0.0, rise0);
    cd(2, 1) = 2 * moment(0.0, fall0);
    cd(2, 2) = 2 * moment(0.0, rise0) - 2 * moment(0.5, fall1);
    const MatrixXd d(sys.viscous());
    CHECK(max_abs(d.block(3, 3, 3, 3) - md) < 1e-4 * max_abs(md));
    CHECK(max_abs(d.block(0, 3, 3, 3) - cd) < 1e-4 * max_abs(cd));
  }
}

TEST_CASE("element damping quadrature converges under refinement") {
  // Under the one-point rule each element adds m0/4 to every pair of its
  // nodes, so the psi-psi block sums to int_0^1 sqrt(x) = 2/3 minus the
  // three quarters of the last element lost to the Dirichlet node.
  double previous = 1.0;
  for (int n : {8, 32, 128}) {
    const auto sys = assemble_generator(build_mesh(n), BeamParameters{}, shear_root());
    const int b = sys.block_size();
    const MatrixXd d(sys.viscous());
    const double h = 2.0 / n;
    const double tail = 0.75 * 2.0 / 3.0 * (1.0 - std::pow(1.0 - h, 1.5));
    const double error = std::abs(d.block(b, b, b, b).sum() - (2.0 / 3.0 - tail));
    // Only the element at x = 0 is inexact; its share shrinks like h^1.5.
    CHECK(error < 3e-5 * std::pow(h, 1.5));
    CHECK(error < previous / 4.0);
    previous = error;
  }
}

TEST_CASE("hypothesis enforcement during assembly") {
  DampingConfiguration bad;
  bad.bending = DampingProfile::power_law(DampingSide::kBending, 1.0, 1.0);
  CHECK(code_of([&] { assemble_generator(build_mesh(8), BeamParameters{}, bad); }) ==
        ErrorCode::kHypothesis);
  AssemblyOptions loose;
  loose.enforce_hypotheses = false;
  CHECK_NOTHROW(assemble_generator(build_mesh(8), BeamParameters{}, bad, loose));
  CHECK(code_of([] {
          assemble_generator(build_mesh(8), BeamParameters{0.0, 1, 1, 1},
                             DampingConfiguration{});
        }) == ErrorCode::kConfiguration);
}

TEST_CASE("property: gram and mass matrices are symmetric positive definite") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(0.1, 10.0);
  for (int trial = 0; trial < 8; ++trial) {
    const BeamParameters p{pos(rng), pos(rng), pos(rng), pos(rng)};
    const auto sys = assemble_generator(build_mesh(4 + 2 * trial), p,
                                        trial % 2 ? shear_root() : bending_root());
    for (const MatrixXd& a : {MatrixXd(sys.gram()), MatrixXd(sys.lhs())}) {
      CHECK(max_abs(a - a.transpose()) < 1e-12 * max_abs(a));
      Eigen::LLT<MatrixXd> llt(a);
      CHECK(llt.info() == Eigen::Success);
    }
    const MatrixXd d(sys.viscous());
    CHECK(max_abs(d - d.transpose()) < 1e-14);
    CHECK(Eigen::SelfAdjointEigenSolver<MatrixXd>(d).eigenvalues().minCoeff() >
          -1e-12 * max_abs(d));
  }
}

TEST_CASE("property: dissipativity in the energy inner product") {
  std::mt19937_64 rng(9);
  const BeamParameters p{1.3, 0.7, 2.0, 0.5};
  SUBCASE("undamped generator is skew") {
    const auto sys = assemble_generator(build_mesh(16), p, DampingConfiguration{});
    for (int trial = 0; trial < 10; ++trial) {
      const VectorXd u = random_vector(sys.dimension(), rng);
      const VectorXd au = sys.apply(u);
      const double scale = h_norm(sys, u) * h_norm(sys, au);
      CHECK(std::abs(u.dot(sys.gram() * au)) < 1e-12 * scale);
    }
  }
  SUBCASE("damped generator dissipates exactly the viscous power") {
    for (const auto& d : {shear_root(), bending_root()}) {
      const auto sys = assemble_generator(build_mesh(16), p, d);
      for (int trial = 0; trial < 10; ++trial) {
        const VectorXd u = random_vector(sys.dimension(), rng);
        const VectorXd au = sys.apply(u);
        const double rate = u.dot(sys.gram() * au);
        const double scale = h_norm(sys, u) * h_norm(sys, au);
        CHECK(rate <= 1e-12 * scale);
        CHECK(rate == doctest::Approx(-sys.viscous_power(u)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("damping couples only basis functions touching (0, 1]") {
  for (const auto& d : {shear_root(), bending_root()}) {
    const auto sys = assemble_generator(build_mesh(16), BeamParameters{}, d);
    const MatrixXd visc(sys.viscous());
    const int n = sys.block_size();
    const Mesh& mesh = sys.mesh();
    for (int node = 1; node < mesh.n_elements; ++node) {
      if (mesh.nodes[node] + mesh.width() > 1e-14) continue;  // support meets (0,1]
      const int i = mesh.dof(node);
      CHECK(visc.row(i).norm() == 0.0);
      CHECK(visc.row(n + i).norm() == 0.0);
    }
  }
}

TEST_CASE("generator action") {
  std::mt19937_64 rng(21);
  const auto sys = assemble_generator(build_mesh(32), BeamParameters{1, 2, 3, 4},
                                      bending_root());
  const int n = sys.block_size();
  CHECK(apply_generator(sys, DiscreteState::zero(n)).stacked().norm() == 0.0);
  for (int trial = 0; trial < 5; ++trial) {
    const auto u = DiscreteState::from_stacked(random_vector(sys.dimension(), rng));
    const auto au = apply_generator(sys, u);
    CHECK((au.w - u.v).norm() < 1e-12 * u.v.norm());
    CHECK((au.phi - u.psi).norm() < 1e-12 * u.psi.norm());
  }
  CHECK(code_of([&] { sys.apply(VectorXd::Zero(3)); }) == ErrorCode::kInput);
}

TEST_CASE("undamped eigenmodes and the graph norm") {
  const auto sys = assemble_generator(build_mesh(16), BeamParameters{}, DampingConfiguration{});
  Eigen::EigenSolver<MatrixXd> es(dense_generator(sys));
  const auto& lambda = es.eigenvalues();
  int checked = 0;
  for (int k = 0; k < lambda.size() && checked < 6; ++k) {
    const double omega = lambda[k].imag();
    if (omega < 1.0) continue;
    const VectorXd a = es.eigenvectors().col(k).real();
    const auto u = DiscreteState::from_stacked(a);
    const auto a2u = apply_generator(sys, apply_generator(sys, u));
    CHECK((a2u.stacked() + omega * omega * a).norm() < 1e-8 * omega * omega * a.norm());
    const auto g = graph_norm(sys, u);
    CHECK(g.a_image_norm == doctest::Approx(omega * g.h_norm).epsilon(1e-8));
    CHECK(g.graph_norm == doctest::Approx(g.h_norm + g.a_image_norm).epsilon(1e-15));
    ++checked;
  }
  CHECK(checked == 6);
  const auto zero = graph_norm(sys, DiscreteState::zero(sys.block_size()));
  CHECK(zero.h_norm == 0.0);
  CHECK(zero.a_image_norm == 0.0);
  CHECK(zero.graph_norm == 0.0);
}

TEST_CASE("energy norm of interpolants converges at second order") {
  ContinuousState s;
  s.w = Field{[](double x) { return std::sin(pi * x); },
              [](double x) { return pi * std::cos(pi * x); }};
  std::vector<double> errors;
  for (int n : {16, 32, 64, 128}) {
    const auto sys = assemble_generator(build_mesh(n), BeamParameters{}, DampingConfiguration{});
    const double hn = h_norm(sys, interpolate(sys.mesh(), s));
    errors.push_back(std::abs(hn - pi));
    if (n == 64) CHECK(hn == doctest::Approx(pi).epsilon(2e-3));
  }
  for (std::size_t i = 1; i < errors.size(); ++i) {
    CHECK(errors[i - 1] / errors[i] == doctest::Approx(4.0).epsilon(0.1));
  }

  // Half the squared norm approaches the continuous energy, also at O(h^2).
  const ContinuousState smooth = smooth_state();
  const BeamParameters p{1.5, 0.5, 2.0, 3.0};
  const double e = energy(smooth, p);
  std::vector<double> gaps;
  for (int n : {32, 64, 128}) {
    const auto sys = assemble_generator(build_mesh(n), p, DampingConfiguration{});
    const double hn = h_norm(sys, interpolate(sys.mesh(), smooth));
    gaps.push_back(std::abs(0.5 * hn * hn - e));
  }
  CHECK(gaps[0] / gaps[1] > 3.0);
  CHECK(gaps[1] / gaps[2] > 3.0);
}

TEST_CASE("graph norm of smooth data is a Cauchy sequence under refinement") {
  const ContinuousState smooth = smooth_state();
  std::vector<double> g;
  for (int n : {32, 64, 128, 256}) {
    const auto sys = assemble_generator(build_mesh(n), BeamParameters{}, bending_root());
    g.push_back(graph_norm(sys, interpolate(sys.mesh(), smooth)).graph_norm);
  }
  const double d1 = std::abs(g[1] - g[0]);
  const double d2 = std::abs(g[2] - g[1]);
  const double d3 = std::abs(g[3] - g[2]);
  CHECK(d2 < 0.75 * d1);
  CHECK(d3 < 0.75 * d2);
  CHECK(d3 < 0.02 * g[3]);
}

TEST_CASE("norm homogeneity") {
  std::mt19937_64 rng(4);
  const auto sys = assemble_generator(build_mesh(8), BeamParameters{}, shear_root());
  const VectorXd u = random_vector(sys.dimension(), rng);
  CHECK(h_norm(sys, VectorXd(VectorXd::Zero(sys.dimension()))) == 0.0);
  for (double c : {-3.0, 0.5, 10.0}) {
    CHECK(h_norm(sys, VectorXd(c * u)) == doctest::Approx(std::abs(c) * h_norm(sys, u)));
  }
}

TEST_CASE("nodal interpolation") {
  const Mesh mesh = build_mesh(4);
  ContinuousState s;
  s.w = Field{[](double x) { return std::sin(pi * x); },
              [](double x) { return pi * std::cos(pi * x); }};
  const auto u = interpolate(mesh, s);
  CHECK(u.w[0] == doctest::Approx(-1.0));
  CHECK(std::abs(u.w[1]) < 1e-15);
  CHECK(u.w[2] == doctest::Approx(1.0));
  CHECK(interpolate(mesh, ContinuousState{}).stacked().norm() == 0.0);

  // A tent in the discrete space is reproduced exactly, energy included.
  ContinuousState tent;
  tent.w = Field{[](double x) { return 1 - std::abs(x); },
                 [](double x) { return x < 0 ? 1.0 : -1.0; }};
  const auto sys = assemble_generator(mesh, BeamParameters{}, DampingConfiguration{});
  const auto t = interpolate(mesh, tent);
  CHECK(t.w[1] == 1.0);
  CHECK(t.w[0] == 0.5);
  CHECK(h_norm(sys, t) == doctest::Approx(std::sqrt(2.0 * energy(tent, BeamParameters{}))));

  ContinuousState off;
  off.phi = Field{[](double) { return 1.0; }, [](double) { return 0.0; }};
  CHECK(code_of([&] { interpolate(mesh, off); }) == ErrorCode::kInput);
}

TEST_CASE("triplet export round-trips") {
  const auto sys = assemble_generator(build_mesh(4), BeamParameters{}, shear_root());
  std::ostringstream os;
  export_triplets(sys.gram(), os);
  std::istringstream is(os.str());
  MatrixXd back = MatrixXd::Zero(sys.dimension(), sys.dimension());
  int r = 0, c = 0, lines = 0;
  double v = 0;
  while (is >> r >> c >> v) {
    back(r, c) = v;
    ++lines;
  }
  CHECK(lines == sys.gram().nonZeros());
  CHECK(max_abs(back - MatrixXd(sys.gram())) == 0.0);
}
