#include "mslab/coupling.hpp"

#include <cmath>

#include "mslab/exceptions.hpp"

namespace mslab {

void validate(const PenaltyParams& p) {
  std::vector<std::string> bad;
  if (p.beta != 1.0 && p.beta != 0.0 && p.beta != -1.0) bad.push_back("beta must be -1, 0 or 1");
  if (!(p.gamma0 > 0)) bad.push_back("gamma0 must be positive");
  if (!(p.gamma1 >= 0)) bad.push_back("gamma1 must be nonnegative");
  if (p.rho_mode == RhoMode::Explicit && !(p.rho_value > 0)) bad.push_back("explicit rho must be positive");
  if (!bad.empty()) throw ConfigError(bad);
}

double resolve_rho(const PenaltyParams& params, const CoefficientField& field, double h) {
  switch (params.rho_mode) {
    case RhoMode::Epsilon:
      if (const auto eps = field.epsilon()) return *eps;
      throw ConfigError({"rho = epsilon needs a coefficient that carries an oscillation scale"});
    case RhoMode::FineH: return h;
    case RhoMode::Explicit:
      if (!(params.rho_value > 0)) throw ConfigError({"explicit rho must be positive"});
      return params.rho_value;
  }
  return h;
}

EdgeTrace trace_data(const PairingEntry& entry, const FineMesh& fine, const CoarseMesh& coarse,
                     const ElementBasis& basis, const CoefficientField& field) {
  EdgeTrace tr;
  const auto& fm = fine.mesh;
  const Point pa = fm.nodes()[entry.fine_node_a], pb = fm.nodes()[entry.fine_node_b];
  tr.normal = entry.normal;
  tr.length = (pb - pa).norm();
  tr.fine_nodes = fm.elements()[entry.fine_element];
  tr.coarse_nodes = coarse.elements()[entry.coarse_element];

  const SubMesh& sm = basis.sub_mesh;
  const int n = sm.subdivisions();
  for (int k = 0; k < 2; ++k) {
    const Point& p = k == 0 ? pa : pb;
    const Eigen::Vector3d lam = barycentric(sm.parent(), p);
    const int a = static_cast<int>(std::lround(lam[1] * n)), b = static_cast<int>(std::lround(lam[2] * n));
    const int node = (a >= 0 && b >= 0 && a + b <= n) ? sm.node_at(a, b) : -1;
    if (node < 0 || (sm.nodes()[node] - p).lpNorm<Eigen::Infinity>() > kGeometryTol) {
      throw GeometryError("interface node (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) +
                          ") is not a node of the sub-mesh of coarse element " +
                          std::to_string(entry.coarse_element) + "; n_sub must equal H/h");
    }
    tr.sub_nodes[k] = node;
  }
  tr.sub_element = sm.boundary_edge_element(tr.sub_nodes[0], tr.sub_nodes[1]);

  const Triangle Ke = fm.triangle(entry.fine_element);
  const auto gfine = p1_gradients(Ke);
  const double s = 0.5 / std::sqrt(3.0);
  for (int g = 0; g < 2; ++g) {
    const double t = g == 0 ? 0.5 - s : 0.5 + s;
    tr.gauss_points[g] = pa + t * (pb - pa);
    tr.weights[g] = 0.5 * tr.length;
    tr.a[g] = field(tr.gauss_points[g]);
    tr.values.block<3, 1>(0, g) = barycentric(Ke, tr.gauss_points[g]);
    for (int i = 0; i < 3; ++i) {
      tr.values(3 + i, g) = (1.0 - t) * basis.values(tr.sub_nodes[0], i) + t * basis.values(tr.sub_nodes[1], i);
    }
  }
  tr.gradients.topRows<3>() = gfine;
  for (int i = 0; i < 3; ++i) tr.gradients.row(3 + i) = basis.gradient(i, tr.sub_element).transpose();
  return tr;
}

Eigen::Matrix<double, 6, 6> edge_matrix(const EdgeTrace& tr, const PenaltyParams& params, double rho,
                                        const InterfaceTerms& terms) {
  Eigen::Matrix<double, 6, 6> M = Eigen::Matrix<double, 6, 6>::Zero();
  const Eigen::Matrix<double, 6, 1> dn = tr.gradients * tr.normal;
  Eigen::Matrix<double, 6, 1> side;
  side << 1, 1, 1, -1, -1, -1;
  for (int g = 0; g < 2; ++g) {
    const Eigen::Matrix<double, 6, 1> J = side.cwiseProduct(tr.values.col(g));  // jump [phi]
    const Eigen::Matrix<double, 6, 1> F = 0.5 * tr.a[g] * dn;                   // average {a grad phi . n}
    const Eigen::Matrix<double, 6, 1> G = tr.a[g] * side.cwiseProduct(dn);      // flux jump
    const double w = tr.weights[g];
    // M(i, j): test i, trial j
    if (terms.consistency) M.noalias() -= w * J * F.transpose();
    if (terms.adjoint) M.noalias() -= w * params.beta * F * J.transpose();
    if (terms.jump) M.noalias() += w * (params.gamma0 / rho) * J * J.transpose();
    if (terms.flux) M.noalias() += w * params.gamma1 * rho * G * G.transpose();
  }
  return M;
}

CoupledDofs number_dofs(const FineMesh& fine, const CoarseMesh& coarse, const DomainSplit& split) {
  CoupledDofs d;
  d.fine_index.assign(fine.mesh.num_nodes(), -1);
  for (int v = 0; v < fine.mesh.num_nodes(); ++v)
    if (!fine.dirichlet[v]) d.fine_index[v] = d.num_fine++;
  std::vector<char> used(coarse.num_nodes(), 0);
  for (int e = 0; e < coarse.num_elements(); ++e) {
    if (!split.omega2(coarse.square_of_element(e))) continue;
    for (int v : coarse.elements()[e]) used[v] = 1;
  }
  d.coarse_index.assign(coarse.num_nodes(), -1);
  for (int v = 0; v < coarse.num_nodes(); ++v)
    if (used[v]) d.coarse_index[v] = d.num_fine + d.num_coarse++;
  return d;
}

namespace {

void add_interface_triplets(std::vector<Tripletd>& trip, const InterfacePairing& pairing, const FineMesh& fine,
                            const CoarseMesh& coarse, const BasisSet& bases, const CoefficientField& field,
                            const PenaltyParams& params, double rho, const CoupledDofs& dofs,
                            const InterfaceTerms& terms) {
  for (const auto& entry : pairing.entries) {
    const auto& basis = bases.at(entry.coarse_element);
    if (!basis) throw GeometryError("no basis for interface element " + std::to_string(entry.coarse_element));
    const EdgeTrace tr = trace_data(entry, fine, coarse, *basis, field);
    const auto M = edge_matrix(tr, params, rho, terms);
    std::array<int, 6> idx;
    for (int k = 0; k < 3; ++k) {
      idx[k] = dofs.fine_index[tr.fine_nodes[k]];
      idx[3 + k] = dofs.coarse_index[tr.coarse_nodes[k]];
    }
    for (int r = 0; r < 6; ++r) {
      if (idx[r] < 0) continue;
      for (int c = 0; c < 6; ++c)
        if (idx[c] >= 0) trip.emplace_back(idx[r], idx[c], M(r, c));
    }
  }
}

}  // namespace

SparseMatrixd assemble_interface(const InterfacePairing& pairing, const FineMesh& fine, const CoarseMesh& coarse,
                                 const BasisSet& bases, const CoefficientField& field, const PenaltyParams& params,
                                 double rho, const CoupledDofs& dofs, const InterfaceTerms& terms) {
  std::vector<Tripletd> trip;
  add_interface_triplets(trip, pairing, fine, coarse, bases, field, params, rho, dofs, terms);
  return from_triplets(dofs.size(), dofs.size(), trip);
}

CoupledSystem assemble_fe_msfem(const DomainSplit& split, const FineMesh& fine, const CoarseMesh& coarse,
                                const InterfacePairing& pairing, const BasisSet& bases, const CoefficientField& field,
                                const SourceFunction& f, const PenaltyParams& params, double rho,
                                QuadratureRule rule, const InterfaceTerms& terms) {
  validate(params);
  CoupledSystem sys;
  sys.dofs = number_dofs(fine, coarse, split);
  const auto& d = sys.dofs;
  sys.rhs = VectorXd::Zero(d.size());
  std::vector<Tripletd> trip;

  const SparseMatrixd Af = assemble_stiffness(fine.mesh, field, rule);
  const VectorXd bf = assemble_load(fine.mesh, f, rule);
  for (int v = 0; v < fine.mesh.num_nodes(); ++v) {
    const int r = d.fine_index[v];
    if (r < 0) continue;
    sys.rhs[r] += bf[v];
    for (SparseMatrixd::InnerIterator it(Af, v); it; ++it) {
      const int c = d.fine_index[it.col()];
      if (c >= 0) trip.emplace_back(r, c, it.value());  // boundary values are zero
    }
  }

  BasisSet omega2(coarse.num_elements());
  for (int e = 0; e < coarse.num_elements(); ++e) {
    if (!split.omega2(coarse.square_of_element(e))) continue;
    if (!bases.at(e)) throw GeometryError("missing multiscale basis for Omega_2 element " + std::to_string(e));
    omega2[e] = bases[e];
  }
  const MsSystem ms = assemble_ms_global(coarse, omega2, f, rule);
  for (int v = 0; v < coarse.num_nodes(); ++v) {
    const int r = d.coarse_index[v];
    if (r < 0) continue;
    sys.rhs[r] += ms.rhs[v];
    for (SparseMatrixd::InnerIterator it(ms.matrix, v); it; ++it) trip.emplace_back(r, d.coarse_index[it.col()], it.value());
  }

  add_interface_triplets(trip, pairing, fine, coarse, omega2, field, params, rho, d, terms);
  sys.matrix = from_triplets(d.size(), d.size(), trip);
  return sys;
}

CombinedSolution solve_coupled(const CoupledSystem& system, const FineMesh& fine, const CoarseMesh& coarse,
                               double beta, const SolveOptions& options) {
  CombinedSolution sol;
  VectorXd x;
  SolveOptions o = options;
  if (beta != 1.0 && o.preconditioner == Preconditioner::IncompleteCholesky) o.preconditioner = Preconditioner::IncompleteLU;
  sol.report = beta == 1.0 ? cg(system.matrix, system.rhs, x, o) : bicgstab(system.matrix, system.rhs, x, o);
  if (!sol.report.acceptable()) {
    throw SolverError(std::string(beta == 1.0 ? "CG" : "BiCGStab") + " on the coupled system: " +
                          to_string(sol.report.status),
                      sol.report.iterations, sol.report.relative_residual);
  }
  const auto& d = system.dofs;
  sol.fine_values = VectorXd::Zero(fine.mesh.num_nodes());
  for (int v = 0; v < fine.mesh.num_nodes(); ++v)
    if (d.fine_index[v] >= 0) sol.fine_values[v] = x[d.fine_index[v]];
  sol.coarse_values = VectorXd::Zero(coarse.num_nodes());
  for (int v = 0; v < coarse.num_nodes(); ++v)
    if (d.coarse_index[v] >= 0) sol.coarse_values[v] = x[d.coarse_index[v]];
  return sol;
}

}  // namespace mslab
