#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mslab/coupling.hpp"
#include "mslab/error_norms.hpp"
#include "mslab/homog.hpp"

using namespace mslab;

namespace {

constexpr double kPi = std::numbers::pi;

double sine_profile(double y) { return 2.0 + 1.8 * std::sin(2 * kPi * y); }

// 1D means by a fine midpoint sum, independent of the library's Gauss panels.
double midpoint_mean(double (*g)(double), int n = 1 << 16) {
  double s = 0;
  for (int k = 0; k < n; ++k) s += g((k + 0.5) / n);
  return s / n;
}

// -4 u_xx - u_yy = 1 on the unit square: a Laplace problem on [0, 1/2] x [0, 1] after x = 2 xi.
double stretched_series(const Point& p) {
  double s = 0;
  for (int m = 1; m < 400; m += 2)
    for (int n = 1; n < 400; n += 2)
      s += std::sin(m * kPi * p.x()) * std::sin(n * kPi * p.y()) / (m * n * (4.0 * m * m + n * n));
  return 16.0 / std::pow(kPi, 4) * s;
}

const SourceFunction kOne = [](const Point&) { return 1.0; };

}  // namespace

TEST_CASE("cell problem invariants") {
  const ScalarFunction paper = *CoefficientField::periodic_paper(1.0).unit_cell();
  const CellSolution cell = solve_cell(paper, 64);
  const LatticeMesh& m = cell.mesh;
  for (int j = 0; j < 2; ++j) {
    double mean = 0;
    for (int e = 0; e < m.num_elements(); ++e) {
      const auto& v = m.elements()[e];
      mean += signed_area(m.triangle(e)) / 3.0 * (cell.chi[j][v[0]] + cell.chi[j][v[1]] + cell.chi[j][v[2]]);
    }
    CHECK(std::abs(mean) <= 1e-10);
    for (int k = 0; k <= 64; ++k) {
      CHECK(cell.chi[j][m.node_at(0, k)] == cell.chi[j][m.node_at(64, k)]);
      CHECK(cell.chi[j][m.node_at(k, 0)] == cell.chi[j][m.node_at(k, 64)]);
    }
    CHECK(cell.reports[j].relative_residual <= 1e-10);
    CHECK(cell.eval(j, Point(1.25, -0.5)) == doctest::Approx(cell.eval(j, Point(0.25, 0.5))).epsilon(1e-12));
  }
  CHECK_THROWS(solve_cell(paper, 15));
}

TEST_CASE("constant coefficient has no corrector") {
  const CellSolution cell = solve_cell([](const Point&) { return 2.5; }, 16);
  CHECK(cell.chi[0].cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(cell.chi[1].cwiseAbs().maxCoeff() <= 1e-12);
  const EffectiveTensor t = effective_tensor([](const Point&) { return 2.5; }, cell);
  CHECK((t.tensor - 2.5 * Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("layered cell against the 1D solution") {
  const ScalarFunction a = [](const Point& y) { return sine_profile(y.x()); };
  const CellSolution cell = solve_cell(a, 256);
  const LatticeMesh& m = cell.mesh;
  CHECK(cell.chi[1].cwiseAbs().maxCoeff() <= 1e-10);
  for (int i = 0; i <= 256; ++i)
    for (int j = 1; j <= 256; ++j) CHECK(std::abs(cell.chi[0][m.node_at(i, j)] - cell.chi[0][m.node_at(i, 0)]) <= 1e-10);

  // chi' = H / a - 1, integrated with a fine midpoint sum and shifted to zero mean
  const double H = 1.0 / midpoint_mean([](double y) { return 1.0 / sine_profile(y); });
  const int sub = 256;
  std::vector<double> exact(257, 0.0);
  for (int i = 0; i < 256; ++i) {
    double s = 0;
    for (int k = 0; k < sub; ++k) s += H / sine_profile((i + (k + 0.5) / sub) / 256.0) - 1.0;
    exact[i + 1] = exact[i] + s / (sub * 256.0);
  }
  double mean = 0;
  for (int i = 0; i < 256; ++i) mean += 0.5 * (exact[i] + exact[i + 1]) / 256.0;
  double dev = 0;
  for (int i = 0; i <= 256; ++i) dev = std::max(dev, std::abs(cell.chi[0][m.node_at(i, 0)] - (exact[i] - mean)));
  MESSAGE("layered corrector deviation from the 1D solution " << dev);
  CHECK(dev <= 1e-3);

  const EffectiveTensor t = effective_tensor(a, cell);
  const double am = midpoint_mean(sine_profile);
  MESSAGE("a* = [" << t.tensor(0, 0) << ", " << t.tensor(1, 1) << "], means " << H << ", " << am);
  CHECK(std::abs(t.tensor(0, 0) - H) <= 1e-4);
  CHECK(std::abs(t.tensor(1, 1) - am) <= 1e-4);
  CHECK(std::abs(t.tensor(0, 1)) <= 1e-4);
  CHECK(harmonic_mean(sine_profile) == doctest::Approx(H).epsilon(1e-10));
  CHECK(arithmetic_mean(sine_profile) == doctest::Approx(am).epsilon(1e-10));
}

TEST_CASE("transpose-symmetric coefficient swaps the correctors") {
  const ScalarFunction a = [](const Point& y) {
    const double s = std::sin(2 * kPi * y.x()), t = std::sin(2 * kPi * y.y());
    return 3.0 + s + t + s * t;
  };
  const CellSolution cell = solve_cell(a, 64);
  const LatticeMesh& m = cell.mesh;
  double asym = 0;
  for (int j = 0; j <= 64; ++j)
    for (int i = 0; i <= 64; ++i) asym = std::max(asym, std::abs(cell.chi[0][m.node_at(i, j)] - cell.chi[1][m.node_at(j, i)]));
  CHECK(asym <= 1e-8);
}

TEST_CASE("effective tensor of the two-scale cell") {
  const ScalarFunction paper = *CoefficientField::periodic_paper(1.0).unit_cell();
  const EffectiveTensor t128 = effective_tensor(paper, solve_cell(paper, 128));
  const EffectiveTensor t256 = effective_tensor(paper, solve_cell(paper, 256));
  MESSAGE("a* (256) = [[" << t256.tensor(0, 0) << ", " << t256.tensor(0, 1) << "], [" << t256.tensor(1, 0) << ", "
                          << t256.tensor(1, 1) << "]], asymmetry " << t256.asymmetry);
  CHECK((t128.tensor - t256.tensor).norm() / t256.tensor.norm() < 1e-3);
  CHECK(t256.tensor(0, 1) == t256.tensor(1, 0));

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(t256.tensor);
  const Bounds b = CoefficientField::periodic_paper(1.0).bounds();
  CHECK(eig.eigenvalues()[0] > 0);
  CHECK(eig.eigenvalues()[0] >= b.lower);
  CHECK(eig.eigenvalues()[1] <= b.upper);

  // Voigt-Reuss bracketing with 2D means by a midpoint sum
  const int n = 1024;
  double am = 0, hm = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double v = paper(Point((i + 0.5) / n, (j + 0.5) / n));
      am += v;
      hm += 1 / v;
    }
  am /= n * n;
  hm = n * n / hm;
  CHECK(eig.eigenvalues()[0] >= hm - 1e-8);
  CHECK(eig.eigenvalues()[1] <= am + 1e-8);
}

TEST_CASE("homogenized solve") {
  const LatticeMesh mesh(128);
  const FieldSolution id = homogenized_solve(Eigen::Matrix2d::Identity(), mesh, kOne);
  double dev = 0;
  for (int v = 0; v < mesh.num_nodes(); ++v) dev = std::max(dev, std::abs(id.values[v] - laplace_series(mesh.nodes()[v])));
  CHECK(dev <= 1e-4);

  const FieldSolution zero = homogenized_solve(Eigen::Matrix2d::Identity(), mesh, [](const Point&) { return 0.0; });
  CHECK(zero.values.isZero(0));

  const FieldSolution aniso = homogenized_solve(Eigen::Vector2d(4, 1).asDiagonal(), mesh, kOne);
  double adev = 0;
  for (int j = 8; j <= 120; j += 16)
    for (int i = 8; i <= 120; i += 16) {
      const int v = mesh.node_at(i, j);
      adev = std::max(adev, std::abs(aniso.values[v] - stretched_series(mesh.nodes()[v])));
    }
  MESSAGE("anisotropic deviation " << adev);
  CHECK(adev <= 1e-3);
}

TEST_CASE("first-order expansion") {
  const LatticeMesh mesh(64);
  const FieldSolution u0 = homogenized_solve(Eigen::Matrix2d::Identity(), mesh, kOne);
  const CellSolution flat = solve_cell([](const Point&) { return 1.0; }, 16);
  CHECK(first_order_expansion(mesh, u0.values, flat, 0.1, mesh) == u0.values);

  const ScalarFunction paper = *CoefficientField::periodic_paper(1.0).unit_cell();
  const CellSolution cell = solve_cell(paper, 64);
  const double eps = 1.0 / 8;
  const VectorXd u1 = first_order_expansion(mesh, u0.values, cell, eps, mesh);
  const auto grad = recover_nodal_gradient(mesh, u0.values);
  const double chi_max = std::max(cell.chi[0].cwiseAbs().maxCoeff(), cell.chi[1].cwiseAbs().maxCoeff());
  const double bound = eps * chi_max * grad.cwiseAbs().rowwise().sum().maxCoeff();
  CHECK((u1 - u0.values).cwiseAbs().maxCoeff() <= bound * (1 + 1e-12));

  CHECK_THROWS_AS(first_order_expansion(mesh, u0.values, cell, eps, LatticeMesh(96)), GeometryError);
}

TEST_CASE("corrector improves on the homogenized solution at eps = 1/32") {
  const double eps = 1.0 / 32;
  const auto field = CoefficientField::periodic_paper(eps);
  const LatticeMesh ref(512);
  const CellSolution cell = solve_cell(*field.unit_cell(), 128);
  const EffectiveTensor t = effective_tensor(*field.unit_cell(), cell);
  const FieldSolution u0 = homogenized_solve(t.tensor, ref, kOne);
  const VectorXd u1 = first_order_expansion(ref, u0.values, cell, eps, ref);
  const FieldSolution ue = solve_reference(ref, field, kOne);

  const NormContext ctx(ref, field);
  const ProlongedField pe = prolong(ref, ue.values);
  const double d0 = norms(prolong(ref, u0.values), pe, ctx).rel_energy;
  const double d1 = norms(prolong(ref, u1), pe, ctx).rel_energy;
  MESSAGE("relative energy distance: u0 " << d0 << ", u1 " << d1);
  CHECK(d1 < d0);

  // sanity band at H = 1/8 (about sqrt(eps)): oversampling MsFEM against the
  // homogenized + corrector pipeline built on the same coarse mesh
  ProblemConfig cfg;
  cfg.coarse_cells = 8;
  cfg.fine_cells = 256;
  cfg.reference_cells = 512;
  MultiscaleProblem p(field, kOne, cfg);
  const CoarseSolution ms = p.solve_msfem(p.mixed_bases());
  const double dm = norms(prolong(p.coarse(), ms.bases, ms.coefficients, ref), pe, ctx).rel_energy;
  const LatticeMesh coarse(8);
  const FieldSolution u0H = homogenized_solve(t.tensor, coarse, kOne);
  const double dH = norms(prolong(ref, first_order_expansion(coarse, u0H.values, cell, eps, ref)), pe, ctx).rel_energy;
  MESSAGE("oversampling MsFEM " << dm << ", coarse corrector pipeline " << dH);
  CHECK(dm <= 3 * dH);
}
