#pragma once

#include <array>
#include <optional>
#include <string>

#include "mslab/coeff.hpp"
#include "mslab/fem.hpp"
#include "mslab/linalg.hpp"
#include "mslab/mesh.hpp"
#include "mslab/msbasis.hpp"

namespace mslab {

enum class RhoMode { Epsilon, FineH, Explicit };

struct PenaltyParams {
  double beta = 1.0;
  double gamma0 = 20.0;
  double gamma1 = 0.1;
  RhoMode rho_mode = RhoMode::Epsilon;
  double rho_value = 0.0;  // used by RhoMode::Explicit
};

/// Checks beta in {-1, 0, 1}, gamma0 > 0, gamma1 >= 0.
void validate(const PenaltyParams& params);

/// The penalty length rho for a field and fine spacing h.
double resolve_rho(const PenaltyParams& params, const CoefficientField& field, double h);

/// Selects the interface term families:
///   consistency  -{a grad u . n}[v]
///   adjoint      -beta [u]{a grad v . n}
///   jump         (gamma0 / rho) [u][v]
///   flux         gamma1 rho [a grad u . n][a grad v . n]
struct InterfaceTerms {
  bool consistency = true;
  bool adjoint = true;
  bool jump = true;
  bool flux = true;

  static InterfaceTerms all() { return {}; }
  static InterfaceTerms only_consistency() { return {true, false, false, false}; }
  static InterfaceTerms only_adjoint() { return {false, true, false, false}; }
  static InterfaceTerms only_jump() { return {false, false, true, false}; }
  static InterfaceTerms only_flux() { return {false, false, false, true}; }
};

/// Local quantities of one fine interface edge. Local functions 0..2 are the
/// fine hats of K_e (in element node order), 3..5 the coarse basis functions
/// of K_E (in coarse vertex order).
struct EdgeTrace {
  std::array<int, 3> fine_nodes{};
  std::array<int, 3> coarse_nodes{};
  int sub_element = -1;              // sub-triangle of K_E adjacent to e
  std::array<int, 2> sub_nodes{};    // sub-mesh nodes at the edge endpoints
  std::array<Point, 2> gauss_points;
  std::array<double, 2> weights{};   // include the edge length
  std::array<double, 2> a{};         // coefficient at the Gauss points
  Eigen::Matrix<double, 6, 2> values;     // function k at Gauss point g
  Eigen::Matrix<double, 6, 2> gradients;  // constant gradient of function k on its side
  Point normal = Point::Zero();
  double length = 0.0;
};

/// Throws GeometryError when a fine endpoint does not coincide with a node of
/// K_E's sub-mesh within 1e-12.
EdgeTrace trace_data(const PairingEntry& entry, const FineMesh& fine, const CoarseMesh& coarse,
                     const ElementBasis& basis, const CoefficientField& field);

/// 6x6 edge matrix, row = test function, column = trial function.
Eigen::Matrix<double, 6, 6> edge_matrix(const EdgeTrace& trace, const PenaltyParams& params, double rho,
                                        const InterfaceTerms& terms = {});

/// Unknown numbering: fine free nodes of Omega_1 first, then coarse nodes of
/// the closure of Omega_2.
struct CoupledDofs {
  std::vector<int> fine_index;    // per fine node, -1 on the domain boundary
  std::vector<int> coarse_index;  // per coarse node, -1 outside closure(Omega_2)
  int num_fine = 0;
  int num_coarse = 0;

  int size() const { return num_fine + num_coarse; }
};

CoupledDofs number_dofs(const FineMesh& fine, const CoarseMesh& coarse, const DomainSplit& split);

/// Interface contributions as a matrix over the coupled unknowns.
SparseMatrixd assemble_interface(const InterfacePairing& pairing, const FineMesh& fine, const CoarseMesh& coarse,
                                 const BasisSet& bases, const CoefficientField& field, const PenaltyParams& params,
                                 double rho, const CoupledDofs& dofs, const InterfaceTerms& terms = {});

struct CoupledSystem {
  SparseMatrixd matrix;
  VectorXd rhs;
  CoupledDofs dofs;
};

/// [A_ff + P_ff, P_fc; P_cf, A_cc + P_cc] and the stacked load vectors.
CoupledSystem assemble_fe_msfem(const DomainSplit& split, const FineMesh& fine, const CoarseMesh& coarse,
                                const InterfacePairing& pairing, const BasisSet& bases, const CoefficientField& field,
                                const SourceFunction& f, const PenaltyParams& params, double rho,
                                QuadratureRule rule = QuadratureRule::EdgeMidpoint,
                                const InterfaceTerms& terms = {});

struct CombinedSolution {
  VectorXd fine_values;    // per fine node, zero on the domain boundary
  VectorXd coarse_values;  // per coarse node, zero outside closure(Omega_2)
  double rho = 0.0;
  SolveReport report;
};

/// CG when beta = 1, BiCGStab otherwise (an incomplete-Cholesky request
/// becomes incomplete LU there). Throws SolverError on failure.
CombinedSolution solve_coupled(const CoupledSystem& system, const FineMesh& fine, const CoarseMesh& coarse,
                               double beta, const SolveOptions& options = {});

// ---------------------------------------------------------------------------
// Method driver

enum class Method { Reference, MsFEMStandard, MsFEMMixed, FEMsFEM };

const char* to_string(Method m);
std::optional<Method> parse_method(const std::string& name);

struct ProblemConfig {
  int coarse_cells = 8;        // N_H
  int fine_cells = 256;        // n_h, frame mesh of Omega_1
  int reference_cells = 512;   // 1 / h_ref
  int layers = 2;
  int n_sub = 0;               // 0: H / h
  double oversampling_scale = 3.0;
  double channel_contrast = 100.0;
  QuadratureRule quadrature = QuadratureRule::EdgeMidpoint;
  SolveOptions solver{1e-10, 0, Preconditioner::IncompleteCholesky};
};

/// Every violated mesh constraint, each prefixed with its config key.
std::vector<std::string> config_violations(const ProblemConfig& config);

/// Coefficients of a coarse multiscale solution, one per coarse node.
struct CoarseSolution {
  VectorXd coefficients;
  BasisSet bases;
  SolveReport report;
};

/// Meshes, split, pairing and bases shared by all methods of one experiment.
class MultiscaleProblem {
 public:
  MultiscaleProblem(CoefficientField field, SourceFunction f, ProblemConfig config);

  const CoefficientField& field() const { return field_; }
  const SourceFunction& source() const { return f_; }
  const ProblemConfig& config() const { return config_; }
  const CoarseMesh& coarse() const { return coarse_; }
  /// Layer split with high-contrast cells moved into Omega_1.
  const DomainSplit& split() const { return split_; }
  const FineMesh& fine();
  const InterfacePairing& pairing();
  const LatticeMesh& reference_mesh();
  int n_sub() const { return n_sub_; }
  double fine_spacing() const { return 1.0 / config_.fine_cells; }
  BasisCache& cache() { return cache_; }

  /// Standard bases on every element.
  BasisSet standard_bases();
  /// Oversampling bases on Omega_2 elements, standard bases elsewhere.
  BasisSet mixed_bases();
  /// Oversampling bases on Omega_2 elements only.
  BasisSet omega2_bases();

  FieldSolution solve_reference();
  CoarseSolution solve_msfem(const BasisSet& bases);
  CoupledSystem assemble_coupled(const PenaltyParams& params, const InterfaceTerms& terms = {});
  CombinedSolution solve_fe_msfem(const PenaltyParams& params);

 private:
  CoefficientField field_;
  SourceFunction f_;
  ProblemConfig config_;
  CoarseMesh coarse_;
  DomainSplit split_;
  int n_sub_;
  std::optional<FineMesh> fine_;
  std::optional<InterfacePairing> pairing_;
  std::optional<LatticeMesh> reference_;
  BasisCache cache_;
};

/// Coarse cells overlapping a region of the field whose contrast exceeds
/// `contrast`.
std::vector<Cell> high_contrast_cells(const CoefficientField& field, int cells_per_side, double contrast);

}  // namespace mslab
