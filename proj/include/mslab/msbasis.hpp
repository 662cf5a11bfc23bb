#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mslab/coeff.hpp"
#include "mslab/fem.hpp"
#include "mslab/mesh.hpp"

namespace mslab {

enum class BasisKind { Standard, Oversampling };

const char* to_string(BasisKind kind);

using BasisValues = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Multiscale shape functions of one coarse element, stored as nodal values
/// on a uniform sub-mesh of the element.
struct ElementBasis {
  int element = -1;
  BasisKind kind = BasisKind::Standard;
  SubMesh sub_mesh;
  BasisValues values;  // column i: function i at every sub-mesh node
  Eigen::Matrix3d cij = Eigen::Matrix3d::Identity();
  std::optional<OversamplingPatch> patch;
  int patch_subdivisions = 0;  // refinement of the patch problems, 0 for Standard
  /// Local stiffness of the three functions, integrated on the sub-mesh.
  Eigen::Matrix3d stiffness = Eigen::Matrix3d::Zero();

  /// Constant gradient of function i on a sub-element.
  Eigen::Vector2d gradient(int i, int sub_element) const;
  /// P1 interpolation of function i at a point of the element.
  double value(int i, const Point& p) const;
  /// Values of the three functions at a point of the element.
  Eigen::Vector3d values_at(const Point& p) const;
};

/// a-harmonic extension of the linear hats of K on an n_sub sub-mesh.
ElementBasis build_standard_basis(const Triangle& K, const CoefficientField& field, int n_sub,
                                  QuadratureRule rule = QuadratureRule::EdgeMidpoint);
ElementBasis build_standard_basis(const CoarseMesh& mesh, int element, const CoefficientField& field, int n_sub,
                                  QuadratureRule rule = QuadratureRule::EdgeMidpoint);

/// Smallest refinement q such that a patch lattice of scale * q * n_sub
/// subdivisions contains every node of K's n_sub sub-mesh. Throws
/// GeometryError when no q <= 64 works.
int patch_refinement(double scale, int n_sub);

/// Patch problems with the hats of S as boundary data, recombined with c_ij
/// and restricted to K's sub-mesh by nodal extraction.
ElementBasis build_oversampling_basis(const OversamplingPatch& patch,
                                      const CoefficientField& field, int n_sub,
                                      QuadratureRule rule = QuadratureRule::EdgeMidpoint);

/// C with C M = I, M_jk = phi_j^S(x_k^K).
Eigen::Matrix3d compute_cij(const Triangle& K, const Triangle& S);

/// Pi_K applied to sum_i coeffs_i psi_i^K, evaluated at x: sum_i coeffs_i phi_i^K(x).
double pi_projection(const ElementBasis& basis, const Eigen::Vector3d& coeffs, const Point& x);

/// sum_j c_ij phi_j^S(x), the linear function Pi_K assigns to psi_i^K.
double hat_combination(const ElementBasis& basis, int i, const Point& x);

/// Per-element basis pointers indexed by coarse element; null entries are
/// elements outside the assembled region.
using BasisSet = std::vector<std::shared_ptr<const ElementBasis>>;

/// Coarse system over all mesh nodes (rows of nodes without elements are empty).
struct MsSystem {
  SparseMatrixd matrix;
  VectorXd rhs;
};

MsSystem assemble_ms_global(const CoarseMesh& mesh, const BasisSet& bases, const SourceFunction& f,
                            QuadratureRule rule = QuadratureRule::EdgeMidpoint);

/// Bases keyed by (field, element, kind, n_sub, scale) so that several methods
/// share the expensive local solves.
class BasisCache {
 public:
  std::shared_ptr<const ElementBasis> standard(const CoarseMesh& mesh, int element, const CoefficientField& field,
                                               int n_sub, QuadratureRule rule = QuadratureRule::EdgeMidpoint);
  std::shared_ptr<const ElementBasis> oversampling(const CoarseMesh& mesh, int element, double scale,
                                                   const DomainSplit& split, const CoefficientField& field, int n_sub,
                                                   QuadratureRule rule = QuadratureRule::EdgeMidpoint);
  size_t size() const { return store_.size(); }
  int builds() const { return builds_; }

 private:
  std::map<std::string, std::shared_ptr<const ElementBasis>> store_;
  int builds_ = 0;
};

/// Plain-text dump: `x y psi_0 psi_1 psi_2` per sub-mesh node.
void write_basis_dump(std::ostream& os, const ElementBasis& basis);

}  // namespace mslab
