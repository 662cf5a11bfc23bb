#pragma once

#include <string>

#include "mslab/coeff.hpp"
#include "mslab/coupling.hpp"
#include "mslab/fem.hpp"
#include "mslab/mesh.hpp"
#include "mslab/msbasis.hpp"

namespace mslab {

/// A (possibly discontinuous) piecewise-linear field on the reference mesh:
/// three vertex values per reference element, plus one value per reference
/// node. Where the field jumps across the interface the node keeps the
/// Omega_2 side.
struct ProlongedField {
  Eigen::Matrix<double, Eigen::Dynamic, 3> element_values;
  VectorXd nodal;
};

/// A continuous nodal field on the reference mesh itself.
ProlongedField prolong(const LatticeMesh& reference, const VectorXd& nodal);

/// P1 field on a nested lattice (a full mesh or the Omega_1 frame). Reference
/// elements outside the source mesh are left untouched in `out`.
void prolong_p1(const LatticeMesh& source, const VectorXd& values, const LatticeMesh& reference,
                ProlongedField& out);

/// Coarse multiscale solution sum_p c_p psi_p; elements without a basis are skipped.
ProlongedField prolong(const CoarseMesh& coarse, const BasisSet& bases, const VectorXd& coefficients,
                       const LatticeMesh& reference);

/// Combined solution: the fine frame values on Omega_1, the multiscale
/// expansion on Omega_2.
ProlongedField prolong(const CombinedSolution& solution, const FineMesh& fine, const CoarseMesh& coarse,
                       const DomainSplit& split, const BasisSet& bases, const LatticeMesh& reference);

struct ErrorReport {
  double rel_l2 = 0, rel_linf = 0, rel_energy = 0;
  double abs_l2 = 0, abs_linf = 0, abs_energy = 0;
  // metadata
  std::string method;
  int coarse_cells = 0, fine_cells = 0, reference_cells = 0;
  double epsilon = std::nan("");
  double beta = std::nan(""), gamma0 = std::nan(""), gamma1 = std::nan(""), rho = std::nan("");
  long long seed = 0;
};

/// Quadrature weights of one reference mesh and coefficient, reused across methods.
class NormContext {
 public:
  NormContext(const LatticeMesh& reference, const CoefficientField& field);

  const LatticeMesh& mesh() const { return *mesh_; }
  double l2(const ProlongedField& u) const;
  double energy(const ProlongedField& u) const;
  double linf(const ProlongedField& u) const;

 private:
  const LatticeMesh* mesh_;
  VectorXd area_;
  VectorXd a_integral_;  // integral of a over each element, edge-midpoint rule
  std::vector<Eigen::Matrix<double, 3, 2>> gradients_;
};

/// Absolute and relative errors of u against the reference. Throws
/// std::domain_error when a reference norm vanishes while the error does not.
ErrorReport norms(const ProlongedField& u, const ProlongedField& reference, const NormContext& context);

}  // namespace mslab
