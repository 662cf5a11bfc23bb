#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mslab/fem.hpp"

using namespace mslab;

namespace {

const Triangle kUnit{Point(0, 0), Point(1, 0), Point(0, 1)};

// Degree-5 Dunavant rule on the reference triangle: (xi, eta, weight / area).
double integrate7(const Triangle& t, const ScalarFunction& f) {
  const double a1 = 0.059715871789770, b1 = 0.470142064105115;
  const double a2 = 0.797426985353087, b2 = 0.101286507323456;
  const double w0 = 0.225, w1 = 0.132394152788506, w2 = 0.125939180544827;
  const double pts[7][3] = {{1.0 / 3, 1.0 / 3, w0}, {a1, b1, w1}, {b1, a1, w1}, {b1, b1, w1},
                            {a2, b2, w2}, {b2, a2, w2}, {b2, b2, w2}};
  double s = 0;
  for (const auto& p : pts) s += p[2] * f(t[0] + p[0] * (t[1] - t[0]) + p[1] * (t[2] - t[0]));
  return s * signed_area(t);
}

// Integral of the exact solution of -Laplace u = 1: sum over odd m, n of
// 64 / (pi^6 m^2 n^2 (m^2 + n^2)). Equals the exact energy |grad u|^2.
double exact_energy() {
  const double pi = std::numbers::pi;
  double s = 0;
  for (int m = 1; m < 4001; m += 2)
    for (int n = 1; n < 4001; n += 2) s += 1.0 / (double(m) * m * n * n * (double(m) * m + double(n) * n));
  return 64.0 / std::pow(pi, 6) * s;
}

}  // namespace

TEST_CASE("element stiffness on the unit right triangle") {
  const Eigen::Matrix3d K = element_stiffness(kUnit, [](const Point&) { return 1.0; }, QuadratureRule::EdgeMidpoint);
  Eigen::Matrix3d expect;
  expect << 1, -0.5, -0.5, -0.5, 0.5, 0, -0.5, 0, 0.5;
  CHECK((K - expect).cwiseAbs().maxCoeff() < 1e-15);
  const Eigen::Matrix3d K3 = element_stiffness(kUnit, [](const Point&) { return 3.0; }, QuadratureRule::EdgeMidpoint);
  CHECK((K3 - 3.0 * K).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("element row sums vanish") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  const auto a = CoefficientField::periodic_paper(0.13);
  for (int k = 0; k < 100; ++k) {
    Triangle t{Point(u(rng), u(rng)), Point(u(rng), u(rng)), Point(u(rng), u(rng))};
    if (std::abs(signed_area(t)) < 1e-3) continue;
    if (signed_area(t) < 0) std::swap(t[1], t[2]);
    for (auto rule : {QuadratureRule::Centroid, QuadratureRule::EdgeMidpoint}) {
      const Eigen::Matrix3d K = element_stiffness(t, [&](const Point& x) { return a(x); }, rule);
      CHECK(K.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-13 * K.cwiseAbs().maxCoeff());
      CHECK((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * K.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("quadrature rules against a high-order oracle") {
  // f(x) = x1 and quadratic monomials are integrated exactly by the edge-midpoint rule
  const Triangle t{Point(0.2, 0.1), Point(0.9, 0.3), Point(0.4, 0.8)};
  const ScalarFunction x1 = [](const Point& p) { return p.x(); };
  const ScalarFunction q = [](const Point& p) { return p.x() * p.y() + p.y() * p.y(); };
  CHECK(integrate(t, x1, QuadratureRule::EdgeMidpoint) == doctest::Approx(integrate7(t, x1)).epsilon(1e-14));
  CHECK(integrate(t, q, QuadratureRule::EdgeMidpoint) == doctest::Approx(integrate7(t, q)).epsilon(1e-13));
  CHECK(integrate(kUnit, x1, QuadratureRule::EdgeMidpoint) == doctest::Approx(1.0 / 6).epsilon(1e-15));

  // slowly varying periodic field on the two-triangle mesh: the edge-midpoint
  // rule tracks the oracle, the centroid rule closes in at rate eps^-2
  const LatticeMesh mesh(1);
  std::vector<double> gap_prev(2, 0.0);
  for (double eps : {10.0, 20.0, 40.0, 80.0}) {
    const auto a = CoefficientField::periodic_paper(eps);
    const ScalarFunction fa = [&](const Point& x) { return a(x); };
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const Triangle tri = mesh.triangle(e);
      const double oracle = integrate7(tri, fa);
      const double one = integrate(tri, fa, QuadratureRule::Centroid);
      const double three = integrate(tri, fa, QuadratureRule::EdgeMidpoint);
      CHECK(std::abs(three - oracle) <= 1e-3 * oracle);
      const double gap = std::abs(one - three) / oracle;
      MESSAGE("eps " << eps << " element " << e << ": centroid vs edge-midpoint " << gap);
      if (gap_prev[e] > 0) CHECK(gap_prev[e] / gap > 2.5);
      if (eps >= 40) CHECK(gap <= 1e-3);
      gap_prev[e] = gap;
    }
  }
}

TEST_CASE("load vector") {
  const LatticeMesh mesh(1);
  const VectorXd b = assemble_load(mesh, [](const Point&) { return 1.0; });
  // corner (1,0) and (0,1) belong to one triangle of area 1/2, the diagonal to two
  CHECK(b.sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(b[mesh.node_at(1, 0)] == doctest::Approx(1.0 / 6).epsilon(1e-15));
  CHECK(b[mesh.node_at(0, 0)] == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(assemble_load(mesh, [](const Point&) { return 0.0; }).isZero(0));

  // f = x1 on one triangle: b_i = integral x1 phi_i, exact for quadratics
  const LatticeMesh m2(2);
  const VectorXd bx = assemble_load(m2, [](const Point& p) { return p.x(); });
  for (int v = 0; v < m2.num_nodes(); ++v) {
    double oracle = 0;
    for (int e = 0; e < m2.num_elements(); ++e) {
      const auto& nodes = m2.elements()[e];
      for (int k = 0; k < 3; ++k) {
        if (nodes[k] != v) continue;
        const Triangle t = m2.triangle(e);
        oracle += integrate7(t, [&](const Point& x) { return x.x() * barycentric(t, x)[k]; });
      }
    }
    CHECK(bx[v] == doctest::Approx(oracle).epsilon(1e-13));
  }
}

TEST_CASE("Dirichlet elimination") {
  const LatticeMesh mesh(3);
  const SparseMatrixd A = assemble_stiffness(mesh, CoefficientField::periodic_paper(0.3));
  const VectorXd b = assemble_load(mesh, [](const Point& p) { return 1 + p.x(); });
  const auto flags = mesh.domain_boundary_flags();

  SUBCASE("homogeneous values leave the free rhs unchanged") {
    const AssembledSystem s = apply_dirichlet(A, b, flags, VectorXd::Zero(mesh.num_nodes()));
    CHECK(s.size() == 4);
    for (int k = 0; k < s.size(); ++k) CHECK(s.rhs[k] == b[s.free_nodes[k]]);
    CHECK(relative_asymmetry(s.matrix) <= 1e-14);
  }
  SUBCASE("lifted data matches a dense bordered solve") {
    VectorXd g(mesh.num_nodes());
    for (int v = 0; v < mesh.num_nodes(); ++v) g[v] = std::sin(3 * mesh.nodes()[v].x()) + mesh.nodes()[v].y();
    const AssembledSystem s = apply_dirichlet(A, b, flags, g);
    VectorXd xr;
    solve_spd(s.matrix, s.rhs, xr);
    const VectorXd u = s.expand(xr);

    // oracle: replace constrained rows by identity rows in the full dense system
    MatrixXd D = MatrixXd(A);
    VectorXd rhs = b;
    for (int v = 0; v < mesh.num_nodes(); ++v) {
      if (!flags[v]) continue;
      D.row(v).setZero();
      D(v, v) = 1;
      rhs[v] = g[v];
    }
    const VectorXd oracle = D.partialPivLu().solve(rhs);
    CHECK((u - oracle).cwiseAbs().maxCoeff() < 1e-12);
    for (int v = 0; v < mesh.num_nodes(); ++v)
      if (flags[v]) CHECK(u[v] == g[v]);
  }
  SUBCASE("single free node") {
    const LatticeMesh m2(2);
    const SparseMatrixd A2 = assemble_stiffness(m2, CoefficientField::constant(1));
    const VectorXd b2 = assemble_load(m2, [](const Point&) { return 1.0; });
    const AssembledSystem s = apply_dirichlet(A2, b2, m2.domain_boundary_flags(), VectorXd::Zero(m2.num_nodes()));
    REQUIRE(s.size() == 1);
    VectorXd x;
    solve_spd(s.matrix, s.rhs, x);
    CHECK(x[0] == doctest::Approx(s.rhs[0] / s.matrix.coeff(0, 0)).epsilon(1e-15));
    CHECK(x[0] == doctest::Approx(0.25 / 4).epsilon(1e-14));
  }
  SUBCASE("everything constrained") {
    const AssembledSystem s = apply_dirichlet(A, b, std::vector<char>(mesh.num_nodes(), 1), VectorXd::Zero(mesh.num_nodes()));
    CHECK(s.size() == 0);
    CHECK(s.expand(VectorXd()).isZero(0));
  }
}

TEST_CASE("global stiffness is SPD") {
  const LatticeMesh mesh(16);
  const SparseMatrixd A = assemble_stiffness(mesh, CoefficientField::periodic_paper(0.1));
  const AssembledSystem s = apply_dirichlet(A, VectorXd::Ones(mesh.num_nodes()), mesh.domain_boundary_flags(),
                                            VectorXd::Zero(mesh.num_nodes()));
  CHECK(relative_asymmetry(s.matrix) <= 1e-14);
  for (int k = 0; k < s.size(); ++k) CHECK(s.matrix.coeff(k, k) > 0);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    VectorXd v(s.size());
    for (auto& c : v) c = n(rng);
    CHECK(v.dot(s.matrix * v) > 0);
  }
  VectorXd x;
  const SolveReport r = cg(s.matrix, s.rhs, x, SolveOptions{1e-10, 0, Preconditioner::Jacobi});
  CHECK(r.converged());
}

TEST_CASE("reference solver") {
  SUBCASE("zero source") {
    const FieldSolution z = solve_reference(LatticeMesh(8), CoefficientField::periodic_paper(0.25), [](const Point&) { return 0.0; });
    CHECK(z.values.isZero(0));
  }
  SUBCASE("Laplace series oracle") {
    CHECK(laplace_series(Point(0.5, 0.5)) == doctest::Approx(0.0736713532).epsilon(1e-8));
    const LatticeMesh mesh(256);
    const auto one = CoefficientField::constant(1);
    const SourceFunction f = [](const Point&) { return 1.0; };
    const FieldSolution u = solve_reference(mesh, one, f);
    CHECK(std::abs(u.values[mesh.node_at(128, 128)] - laplace_series(Point(0.5, 0.5))) < 5e-4);
    double lo = 0;
    for (double v : u.values) lo = std::min(lo, v);
    CHECK(lo >= -1e-12);

    // Galerkin residual on free dofs
    const SparseMatrixd A = assemble_stiffness(mesh, one);
    const AssembledSystem s = apply_dirichlet(A, assemble_load(mesh, f), mesh.domain_boundary_flags(),
                                              VectorXd::Zero(mesh.num_nodes()));
    VectorXd ur(s.size());
    for (int k = 0; k < s.size(); ++k) ur[k] = u.values[s.free_nodes[k]];
    CHECK((s.matrix * ur - s.rhs).norm() <= 1e-10 * s.rhs.norm());
  }
  SUBCASE("energy convergence is first order") {
    // Galerkin identity: |grad(u - u_h)|^2 = |grad u|^2 - b . u_h (f = 1 is integrated exactly)
    const double E = exact_energy();
    std::vector<double> err;
    for (int n : {32, 64, 128}) {
      const LatticeMesh mesh(n);
      const SourceFunction f = [](const Point&) { return 1.0; };
      const FieldSolution u = solve_reference(mesh, CoefficientField::constant(1), f);
      err.push_back(std::sqrt(E - assemble_load(mesh, f).dot(u.values)));
    }
    for (size_t k = 1; k < err.size(); ++k) {
      const double order = std::log2(err[k - 1] / err[k]);
      MESSAGE("observed energy order " << order);
      CHECK(order >= 0.9);
      CHECK(order <= 1.1);
    }
  }
  SUBCASE("non-negativity with positive load and oscillating field") {
    const FieldSolution u = solve_reference(LatticeMesh(64), CoefficientField::periodic_paper(1.0 / 16),
                                            [](const Point&) { return 1.0; });
    CHECK(u.values.minCoeff() >= -1e-12);
  }
}

TEST_CASE("tensor stiffness reduces to the scalar case") {
  const LatticeMesh mesh(6);
  const SparseMatrixd A = assemble_tensor_stiffness(mesh, 2.5 * Eigen::Matrix2d::Identity());
  const SparseMatrixd B = assemble_stiffness(mesh, CoefficientField::constant(2.5));
  CHECK((MatrixXd(A) - MatrixXd(B)).cwiseAbs().maxCoeff() < 1e-13);
}
