#pragma once

#include <array>

#include "mslab/fem.hpp"
#include "mslab/mesh.hpp"

namespace mslab {

/// Periodic correctors chi^1, chi^2 on a resolution x resolution cell mesh.
/// Nodes on opposite cell edges share one unknown; the vectors are stored
/// over all lattice nodes with the shared values duplicated.
struct CellSolution {
  int resolution = 0;
  LatticeMesh mesh{1};
  std::array<VectorXd, 2> chi;
  std::array<SolveReport, 2> reports;

  /// chi^j at any y, wrapped into the unit cell.
  double eval(int j, const Point& y) const;
};

/// Solves -div(a (e_j + grad chi^j)) = 0 periodically with zero mean.
CellSolution solve_cell(const ScalarFunction& a, int resolution,
                        QuadratureRule rule = QuadratureRule::EdgeMidpoint);

struct EffectiveTensor {
  Eigen::Matrix2d tensor = Eigen::Matrix2d::Identity();
  double asymmetry = 0.0;  // |a*_12 - a*_21| before symmetrisation
};

/// a*_ij = integral over Y of a (delta_ij + d chi^j / d y_i), symmetrised.
EffectiveTensor effective_tensor(const ScalarFunction& a, const CellSolution& cell,
                                 QuadratureRule rule = QuadratureRule::EdgeMidpoint);

/// -div(a* grad u0) = f with zero boundary data.
FieldSolution homogenized_solve(const Eigen::Matrix2d& tensor, const LatticeMesh& mesh, const SourceFunction& f,
                                const SolveOptions& options = {});

/// Area-weighted average of the element gradients around each node.
Eigen::Matrix<double, Eigen::Dynamic, 2> recover_nodal_gradient(const TriMesh& mesh, const VectorXd& values);

/// u1 = u0 + eps chi^j(x / eps) d u0 / d x_j at the nodes of `reference`,
/// which must nest in `mesh`.
VectorXd first_order_expansion(const LatticeMesh& mesh, const VectorXd& u0, const CellSolution& cell, double epsilon,
                               const LatticeMesh& reference);

/// 1D means of a layered profile by composite Gauss quadrature.
double harmonic_mean(const std::function<double(double)>& a, int panels = 4096);
double arithmetic_mean(const std::function<double(double)>& a, int panels = 4096);

}  // namespace mslab
