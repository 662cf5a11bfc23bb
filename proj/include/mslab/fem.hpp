#pragma once

#include <functional>
#include <vector>

#include "mslab/coeff.hpp"
#include "mslab/linalg.hpp"
#include "mslab/mesh.hpp"

namespace mslab {

/// Points per triangle. EdgeMidpoint is exact for quadratics.
enum class QuadratureRule { Centroid = 1, EdgeMidpoint = 3 };

using ScalarFunction = std::function<double(const Point&)>;
using SourceFunction = ScalarFunction;

struct QuadraturePoint {
  Point x;
  double weight;  // includes the element area
};

/// Quadrature points of `rule` on triangle t (at most 3).
std::vector<QuadraturePoint> quadrature_points(const Triangle& t, QuadratureRule rule);

/// Gradients of the three barycentric hats, one per row.
Eigen::Matrix<double, 3, 2> p1_gradients(const Triangle& t);

/// Integral of a over t by `rule`.
double integrate(const Triangle& t, const ScalarFunction& a, QuadratureRule rule);

/// Local P1 stiffness (integral of a) * G G^T with G the hat gradients.
Eigen::Matrix3d element_stiffness(const Triangle& t, const ScalarFunction& a, QuadratureRule rule);

SparseMatrixd assemble_stiffness(const TriMesh& mesh, const ScalarFunction& a,
                                 QuadratureRule rule = QuadratureRule::EdgeMidpoint);
SparseMatrixd assemble_stiffness(const TriMesh& mesh, const CoefficientField& field,
                                 QuadratureRule rule = QuadratureRule::EdgeMidpoint);
/// Stiffness for a constant (possibly anisotropic) tensor.
SparseMatrixd assemble_tensor_stiffness(const TriMesh& mesh, const Eigen::Matrix2d& tensor);

/// b_i = integral of f * phi_i.
VectorXd assemble_load(const TriMesh& mesh, const SourceFunction& f,
                       QuadratureRule rule = QuadratureRule::EdgeMidpoint);

/// Reduced system after symmetric elimination of constrained nodes.
struct AssembledSystem {
  SparseMatrixd matrix;
  VectorXd rhs;
  std::vector<int> dof_map;       // node -> free index, -1 when constrained
  std::vector<int> free_nodes;    // free index -> node
  VectorXd dirichlet_values;      // per node; meaningful where constrained

  int size() const { return static_cast<int>(free_nodes.size()); }
  /// Nodal vector with the reduced solution scattered and constraints filled.
  VectorXd expand(const VectorXd& reduced) const;
};

AssembledSystem apply_dirichlet(const SparseMatrixd& matrix, const VectorXd& rhs, const std::vector<char>& constrained,
                                const VectorXd& values);

struct FieldSolution {
  VectorXd values;  // per mesh node
  SolveReport report;
};

/// Systems up to this size are factorised directly, larger ones use CG.
inline constexpr int kDirectSolveLimit = 400000;

/// SPD solve: sparse LDL^T with iterative refinement below kDirectSolveLimit,
/// incomplete-Cholesky CG above (a Jacobi request is upgraded). The
/// report always carries the true relative residual. Throws SolverError when
/// the residual exceeds the tolerance.
SolveReport solve_spd(const SparseMatrixd& A, const VectorXd& b, VectorXd& x, const SolveOptions& options = {});

/// Solves A X = B for several right-hand sides with one factorisation.
MatrixXd solve_spd_multi(const SparseMatrixd& A, const MatrixXd& B);

/// Dirichlet problem -div(a grad u) = f on `mesh`, u = values on constrained nodes.
FieldSolution solve_dirichlet(const TriMesh& mesh, const CoefficientField& field, const SourceFunction& f,
                              const std::vector<char>& constrained, const VectorXd& values,
                              const SolveOptions& options = {}, QuadratureRule rule = QuadratureRule::EdgeMidpoint);

/// Fine P1 reference on a full lattice over the unit square, zero boundary data.
FieldSolution solve_reference(const LatticeMesh& mesh, const CoefficientField& field, const SourceFunction& f,
                              const SolveOptions& options = {}, QuadratureRule rule = QuadratureRule::EdgeMidpoint);

/// Value of -Laplace u = 1 on the unit square with zero boundary data,
/// summed from the sine series (interior points converge geometrically).
double laplace_series(const Point& p);

}  // namespace mslab
