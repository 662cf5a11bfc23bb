#include "mslab/homog.hpp"

#include <cmath>

#include "mslab/exceptions.hpp"

namespace mslab {

double CellSolution::eval(int j, const Point& y) const {
  const Point w(y.x() - std::floor(y.x()), y.y() - std::floor(y.y()));
  const auto loc = mesh.locate(w);
  if (!loc) throw GeometryError("cell evaluation failed");
  const auto& v = mesh.elements()[loc->element];
  return loc->weights.dot(Eigen::Vector3d(chi[j][v[0]], chi[j][v[1]], chi[j][v[2]]));
}

CellSolution solve_cell(const ScalarFunction& a, int resolution, QuadratureRule rule) {
  if (resolution < 16) throw std::invalid_argument("cell resolution must be at least 16");
  const int R = resolution;
  CellSolution cell;
  cell.resolution = R;
  cell.mesh = LatticeMesh(R);
  const LatticeMesh& m = cell.mesh;

  std::vector<int> periodic(m.num_nodes());
  for (int v = 0; v < m.num_nodes(); ++v) {
    const Cell c = m.lattice_of_node(v);
    periodic[v] = (c.j % R) * R + (c.i % R);
  }
  const int n = R * R;
  std::vector<Tripletd> trip;
  MatrixXd rhs = MatrixXd::Zero(n, 2);
  for (int e = 0; e < m.num_elements(); ++e) {
    const Triangle t = m.triangle(e);
    const auto g = p1_gradients(t);
    const double ia = integrate(t, a, rule);
    const auto& v = m.elements()[e];
    for (int r = 0; r < 3; ++r) {
      const int pr = periodic[v[r]];
      rhs.row(pr) -= ia * g.row(r);
      for (int c = 0; c < 3; ++c) trip.emplace_back(pr, periodic[v[c]], ia * g.row(r).dot(g.row(c)));
    }
  }
  const SparseMatrixd A = from_triplets(n, n, trip);

  // pin unknown 0, solve the rest
  std::vector<Tripletd> reduced;
  for (int r = 1; r < n; ++r)
    for (SparseMatrixd::InnerIterator it(A, r); it; ++it)
      if (it.col() > 0) reduced.emplace_back(r - 1, static_cast<int>(it.col()) - 1, it.value());
  const SparseMatrixd Ar = from_triplets(n - 1, n - 1, reduced);
  const MatrixXd br = rhs.bottomRows(n - 1);
  const MatrixXd xr = solve_spd_multi(Ar, br);

  for (int j = 0; j < 2; ++j) {
    VectorXd x(n);
    x[0] = 0.0;
    x.tail(n - 1) = xr.col(j);
    const double bn = br.col(j).norm();
    cell.reports[j].iterations = 1;
    cell.reports[j].relative_residual = bn > 0 ? (br.col(j) - Ar * xr.col(j)).norm() / bn : 0.0;

    VectorXd full(m.num_nodes());
    for (int v = 0; v < m.num_nodes(); ++v) full[v] = x[periodic[v]];
    double mean = 0.0;
    for (int e = 0; e < m.num_elements(); ++e) {
      const auto& v = m.elements()[e];
      mean += signed_area(m.triangle(e)) / 3.0 * (full[v[0]] + full[v[1]] + full[v[2]]);
    }
    full.array() -= mean;
    cell.chi[j] = std::move(full);
  }
  return cell;
}

EffectiveTensor effective_tensor(const ScalarFunction& a, const CellSolution& cell, QuadratureRule rule) {
  const LatticeMesh& m = cell.mesh;
  Eigen::Matrix2d t = Eigen::Matrix2d::Zero();
  for (int e = 0; e < m.num_elements(); ++e) {
    const Triangle tri = m.triangle(e);
    const auto g = p1_gradients(tri);
    const double ia = integrate(tri, a, rule);
    const auto& v = m.elements()[e];
    for (int j = 0; j < 2; ++j) {
      const Eigen::Vector2d grad = g.transpose() * Eigen::Vector3d(cell.chi[j][v[0]], cell.chi[j][v[1]], cell.chi[j][v[2]]);
      // column j holds e_j + grad chi^j
      t.col(j) += ia * (Eigen::Vector2d::Unit(j) + grad);
    }
  }
  EffectiveTensor out;
  out.asymmetry = std::abs(t(0, 1) - t(1, 0));
  out.tensor = 0.5 * (t + t.transpose());
  return out;
}

FieldSolution homogenized_solve(const Eigen::Matrix2d& tensor, const LatticeMesh& mesh, const SourceFunction& f,
                                const SolveOptions& options) {
  const AssembledSystem sys = apply_dirichlet(assemble_tensor_stiffness(mesh, tensor), assemble_load(mesh, f),
                                              mesh.domain_boundary_flags(), VectorXd::Zero(mesh.num_nodes()));
  FieldSolution sol;
  VectorXd x;
  sol.report = solve_spd(sys.matrix, sys.rhs, x, options);
  sol.values = sys.expand(x);
  return sol;
}

Eigen::Matrix<double, Eigen::Dynamic, 2> recover_nodal_gradient(const TriMesh& mesh, const VectorXd& values) {
  Eigen::Matrix<double, Eigen::Dynamic, 2> g = Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(mesh.num_nodes(), 2);
  VectorXd weight = VectorXd::Zero(mesh.num_nodes());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Triangle t = mesh.triangle(e);
    const auto& v = mesh.elements()[e];
    const double area = signed_area(t);
    const Eigen::RowVector2d ge =
        (p1_gradients(t).transpose() * Eigen::Vector3d(values[v[0]], values[v[1]], values[v[2]])).transpose();
    for (int k = 0; k < 3; ++k) {
      g.row(v[k]) += area * ge;
      weight[v[k]] += area;
    }
  }
  for (int v = 0; v < mesh.num_nodes(); ++v)
    if (weight[v] > 0) g.row(v) /= weight[v];
  return g;
}

VectorXd first_order_expansion(const LatticeMesh& mesh, const VectorXd& u0, const CellSolution& cell, double epsilon,
                               const LatticeMesh& reference) {
  if (reference.cells_per_side() % mesh.cells_per_side() != 0) {
    throw GeometryError("reference mesh does not nest in the homogenized mesh");
  }
  const auto grad = recover_nodal_gradient(mesh, u0);
  VectorXd u1(reference.num_nodes());
  for (int v = 0; v < reference.num_nodes(); ++v) {
    const Point& x = reference.nodes()[v];
    const auto loc = mesh.locate(x);
    if (!loc) throw GeometryError("reference node outside the homogenized mesh");
    const auto& n = mesh.elements()[loc->element];
    double value = 0.0;
    Eigen::RowVector2d g = Eigen::RowVector2d::Zero();
    for (int k = 0; k < 3; ++k) {
      value += loc->weights[k] * u0[n[k]];
      g += loc->weights[k] * grad.row(n[k]);
    }
    const Point y = x / epsilon;
    u1[v] = value + epsilon * (cell.eval(0, y) * g[0] + cell.eval(1, y) * g[1]);
  }
  return u1;
}

namespace {

double gauss_mean(const std::function<double(double)>& h, int panels) {
  static const double node = std::sqrt(0.6);
  double s = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double c = (p + 0.5) / panels, r = 0.5 / panels;
    s += r * (5.0 / 9.0 * h(c - node * r) + 8.0 / 9.0 * h(c) + 5.0 / 9.0 * h(c + node * r));
  }
  return s;
}

}  // namespace

double harmonic_mean(const std::function<double(double)>& a, int panels) {
  return 1.0 / gauss_mean([&a](double y) { return 1.0 / a(y); }, panels);
}

double arithmetic_mean(const std::function<double(double)>& a, int panels) { return gauss_mean(a, panels); }

}  // namespace mslab
