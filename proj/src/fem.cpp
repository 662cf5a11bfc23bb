#include "mslab/fem.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <numbers>

#include "mslab/exceptions.hpp"

namespace mslab {

std::vector<QuadraturePoint> quadrature_points(const Triangle& t, QuadratureRule rule) {
  const double area = signed_area(t);
  if (rule == QuadratureRule::Centroid) return {{barycenter(t), area}};
  return {{0.5 * (t[0] + t[1]), area / 3}, {0.5 * (t[1] + t[2]), area / 3}, {0.5 * (t[2] + t[0]), area / 3}};
}

Eigen::Matrix<double, 3, 2> p1_gradients(const Triangle& t) {
  const double twice = 2.0 * signed_area(t);
  Eigen::Matrix<double, 3, 2> g;
  for (int k = 0; k < 3; ++k) {
    const Point& p = t[(k + 1) % 3];
    const Point& q = t[(k + 2) % 3];
    g(k, 0) = (p.y() - q.y()) / twice;
    g(k, 1) = (q.x() - p.x()) / twice;
  }
  return g;
}

double integrate(const Triangle& t, const ScalarFunction& a, QuadratureRule rule) {
  double s = 0.0;
  for (const auto& q : quadrature_points(t, rule)) s += q.weight * a(q.x);
  return s;
}

Eigen::Matrix3d element_stiffness(const Triangle& t, const ScalarFunction& a, QuadratureRule rule) {
  const auto g = p1_gradients(t);
  return integrate(t, a, rule) * (g * g.transpose());
}

SparseMatrixd assemble_stiffness(const TriMesh& mesh, const ScalarFunction& a, QuadratureRule rule) {
  std::vector<Tripletd> trip;
  trip.reserve(9 * static_cast<size_t>(mesh.num_elements()));
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& v = mesh.elements()[e];
    const Eigen::Matrix3d k = element_stiffness(mesh.triangle(e), a, rule);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) trip.emplace_back(v[r], v[c], k(r, c));
  }
  return from_triplets(mesh.num_nodes(), mesh.num_nodes(), trip);
}

SparseMatrixd assemble_stiffness(const TriMesh& mesh, const CoefficientField& field, QuadratureRule rule) {
  return assemble_stiffness(mesh, ScalarFunction([&field](const Point& x) { return field(x); }), rule);
}

SparseMatrixd assemble_tensor_stiffness(const TriMesh& mesh, const Eigen::Matrix2d& tensor) {
  std::vector<Tripletd> trip;
  trip.reserve(9 * static_cast<size_t>(mesh.num_elements()));
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& v = mesh.elements()[e];
    const Triangle t = mesh.triangle(e);
    const auto g = p1_gradients(t);
    const Eigen::Matrix3d k = signed_area(t) * (g * tensor * g.transpose());
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) trip.emplace_back(v[r], v[c], k(r, c));
  }
  return from_triplets(mesh.num_nodes(), mesh.num_nodes(), trip);
}

VectorXd assemble_load(const TriMesh& mesh, const SourceFunction& f, QuadratureRule rule) {
  VectorXd b = VectorXd::Zero(mesh.num_nodes());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& v = mesh.elements()[e];
    const Triangle t = mesh.triangle(e);
    for (const auto& q : quadrature_points(t, rule)) {
      const double fw = q.weight * f(q.x);
      if (fw == 0.0) continue;
      const Eigen::Vector3d lam = barycentric(t, q.x);
      for (int k = 0; k < 3; ++k) b[v[k]] += fw * lam[k];
    }
  }
  return b;
}

VectorXd AssembledSystem::expand(const VectorXd& reduced) const {
  VectorXd full = dirichlet_values;
  for (int k = 0; k < size(); ++k) full[free_nodes[k]] = reduced[k];
  return full;
}

AssembledSystem apply_dirichlet(const SparseMatrixd& matrix, const VectorXd& rhs, const std::vector<char>& constrained,
                                const VectorXd& values) {
  const int n = static_cast<int>(matrix.rows());
  if (static_cast<int>(constrained.size()) != n || values.size() != n || rhs.size() != n) {
    throw std::invalid_argument("apply_dirichlet: size mismatch");
  }
  AssembledSystem s;
  s.dof_map.assign(n, -1);
  s.dirichlet_values = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (constrained[i]) {
      s.dirichlet_values[i] = values[i];
    } else {
      s.dof_map[i] = static_cast<int>(s.free_nodes.size());
      s.free_nodes.push_back(i);
    }
  }
  const int m = s.size();
  s.rhs.resize(m);
  std::vector<Tripletd> trip;
  trip.reserve(matrix.nonZeros());
  for (int k = 0; k < m; ++k) {
    const int row = s.free_nodes[k];
    double r = rhs[row];
    for (SparseMatrixd::InnerIterator it(matrix, row); it; ++it) {
      const int col = static_cast<int>(it.col());
      if (constrained[col]) {
        r -= it.value() * values[col];
      } else {
        trip.emplace_back(k, s.dof_map[col], it.value());
      }
    }
    s.rhs[k] = r;
  }
  s.matrix = from_triplets(m, m, trip);
  return s;
}

namespace {

using Factorization = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double, Eigen::ColMajor, int>>;

void factorize(Factorization& ldlt, const SparseMatrixd& A) {
  ldlt.compute(Eigen::SparseMatrix<double, Eigen::ColMajor, int>(A));
  if (ldlt.info() != Eigen::Success) throw SingularMatrixError("sparse LDL^T factorisation failed");
}

}  // namespace

SolveReport solve_spd(const SparseMatrixd& A, const VectorXd& b, VectorXd& x, const SolveOptions& options) {
  const int n = static_cast<int>(b.size());
  SolveReport report;
  if (n == 0) {
    x.resize(0);
    return report;
  }
  if (n <= kDirectSolveLimit) {
    detail::Stopwatch clock;
    Factorization ldlt;
    factorize(ldlt, A);
    x = ldlt.solve(b);
    const double bn = b.norm();
    VectorXd r = b - A * x;
    report.iterations = 1;
    // iterative refinement recovers digits lost to high coefficient contrast
    while (bn > 0 && r.norm() > options.rtol * bn && report.iterations < 4) {
      x += ldlt.solve(r);
      r = b - A * x;
      ++report.iterations;
    }
    report.relative_residual = bn > 0 ? r.norm() / bn : 0.0;
    report.wall_ms = clock.elapsed_ms();
    // strong contrast can put the rounding floor above rtol |b|
    const double floor = detail::roundoff_floor(detail::inf_norm(A), x, bn);
    report.status = report.relative_residual <= options.rtol ? SolveStatus::Converged
                    : r.norm() <= floor                      ? SolveStatus::RoundoffLimited
                                                             : SolveStatus::MaxIterations;
  } else {
    SolveOptions o = options;
    if (o.preconditioner == Preconditioner::Jacobi) o.preconditioner = Preconditioner::IncompleteCholesky;
    report = cg(A, b, x, o);
  }
  if (!report.acceptable()) {
    throw SolverError(std::string("SPD solve failed: ") + to_string(report.status), report.iterations,
                      report.relative_residual);
  }
  return report;
}

MatrixXd solve_spd_multi(const SparseMatrixd& A, const MatrixXd& B) {
  if (A.rows() == 0) return MatrixXd(0, B.cols());
  Factorization ldlt;
  factorize(ldlt, A);
  return ldlt.solve(B);
}

FieldSolution solve_dirichlet(const TriMesh& mesh, const CoefficientField& field, const SourceFunction& f,
                              const std::vector<char>& constrained, const VectorXd& values,
                              const SolveOptions& options, QuadratureRule rule) {
  const AssembledSystem sys =
      apply_dirichlet(assemble_stiffness(mesh, field, rule), assemble_load(mesh, f, rule), constrained, values);
  VectorXd x;
  FieldSolution sol;
  sol.report = solve_spd(sys.matrix, sys.rhs, x, options);
  sol.values = sys.expand(x);
  return sol;
}

FieldSolution solve_reference(const LatticeMesh& mesh, const CoefficientField& field, const SourceFunction& f,
                              const SolveOptions& options, QuadratureRule rule) {
  return solve_dirichlet(mesh, field, f, mesh.domain_boundary_flags(), VectorXd::Zero(mesh.num_nodes()), options,
                         rule);
}

double laplace_series(const Point& p) {
  // u = x(1-x)/2 - sum over odd m of 4/(pi m)^3 sin(m pi x) cosh(m pi (y-1/2)) / cosh(m pi / 2)
  const double pi = std::numbers::pi;
  double u = 0.5 * p.x() * (1.0 - p.x());
  for (int m = 1; m < 4000; m += 2) {
    const double mp = m * pi;
    // ratio of cosh written with exponentials to avoid overflow
    const double ratio = (std::exp(mp * (std::abs(p.y() - 0.5) - 0.5)) + std::exp(-mp * (std::abs(p.y() - 0.5) + 0.5))) /
                         (1.0 + std::exp(-mp));
    const double term = 4.0 / (mp * mp * mp) * std::sin(mp * p.x()) * ratio;
    u -= term;
    if (std::abs(term) < 1e-18 && ratio < 1e-6) break;
  }
  return u;
}

}  // namespace mslab
