#include <cmath>

#include "mslab/coupling.hpp"
#include "mslab/exceptions.hpp"

namespace mslab {

const char* to_string(Method m) {
  switch (m) {
    case Method::Reference: return "reference";
    case Method::MsFEMStandard: return "msfem";
    case Method::MsFEMMixed: return "mixed";
    case Method::FEMsFEM: return "fe-msfem";
  }
  return "?";
}

std::optional<Method> parse_method(const std::string& name) {
  for (Method m : {Method::Reference, Method::MsFEMStandard, Method::MsFEMMixed, Method::FEMsFEM})
    if (name == to_string(m)) return m;
  return std::nullopt;
}

std::vector<Cell> high_contrast_cells(const CoefficientField& field, int cells_per_side, double contrast) {
  std::vector<Cell> out;
  const auto regions = field.high_contrast_regions(contrast);
  const double H = 1.0 / cells_per_side;
  for (int j = 0; j < cells_per_side; ++j) {
    for (int i = 0; i < cells_per_side; ++i) {
      const Rect cell{i * H, j * H, (i + 1) * H, (j + 1) * H};
      for (const auto& r : regions) {
        if (cell.overlaps(r)) {
          out.push_back({i, j});
          break;
        }
      }
    }
  }
  return out;
}

std::vector<std::string> config_violations(const ProblemConfig& c) {
  const int n_sub = c.n_sub > 0 ? c.n_sub : (c.coarse_cells > 0 ? c.fine_cells / c.coarse_cells : 0);
  std::vector<std::string> bad;
  if (c.coarse_cells < 4) bad.push_back("mesh.NH: coarse mesh needs at least 4 cells per side");
  if (c.fine_cells <= 0 || c.coarse_cells <= 0 || c.fine_cells % c.coarse_cells != 0) {
    bad.push_back("mesh.nh: " + std::to_string(c.fine_cells) + " is not a multiple of NH = " +
                  std::to_string(c.coarse_cells));
  }
  if (n_sub < 2) bad.push_back("mesh.n_sub: must be at least 2");
  if (c.reference_cells <= 0 || (c.fine_cells > 0 && c.reference_cells % c.fine_cells != 0)) {
    bad.push_back("mesh.href: 1/href = " + std::to_string(c.reference_cells) + " is not a multiple of nh = " +
                  std::to_string(c.fine_cells));
  }
  if (n_sub >= 2 && c.coarse_cells > 0 && c.reference_cells % (c.coarse_cells * n_sub) != 0) {
    bad.push_back("mesh.href: reference mesh does not nest in the basis sub-meshes (1/href must be a multiple of NH * "
                  "n_sub)");
  }
  if (!(c.oversampling_scale > 1.0)) bad.push_back("mesh.sigma_os: must exceed 1");
  if (c.layers < 1 || 2 * c.layers >= c.coarse_cells) {
    bad.push_back("mesh.layers: " + std::to_string(c.layers) + " boundary layers leave no interior cells with NH = " +
                  std::to_string(c.coarse_cells));
  }
  return bad;
}

MultiscaleProblem::MultiscaleProblem(CoefficientField field, SourceFunction f, ProblemConfig config)
    : field_(std::move(field)),
      f_(std::move(f)),
      config_(config),
      coarse_(config.coarse_cells >= 4 ? config.coarse_cells : 4),
      n_sub_(config.n_sub > 0 ? config.n_sub
                              : (config.coarse_cells > 0 ? config.fine_cells / config.coarse_cells : 0)) {
  if (auto bad = config_violations(config_); !bad.empty()) throw ConfigError(bad);
  split_ = split_domain(coarse_, config_.layers);
  const auto channels = high_contrast_cells(field_, config_.coarse_cells, config_.channel_contrast);
  if (!channels.empty()) split_ = absorb_cells(split_, coarse_, channels);
}

const FineMesh& MultiscaleProblem::fine() {
  if (!fine_) fine_ = build_frame_fine_mesh(split_, config_.fine_cells);
  return *fine_;
}

const InterfacePairing& MultiscaleProblem::pairing() {
  if (!pairing_) pairing_ = pair_interface(split_, fine(), coarse_);
  return *pairing_;
}

const LatticeMesh& MultiscaleProblem::reference_mesh() {
  if (!reference_) reference_.emplace(config_.reference_cells);
  return *reference_;
}

BasisSet MultiscaleProblem::standard_bases() {
  BasisSet out(coarse_.num_elements());
  for (int e = 0; e < coarse_.num_elements(); ++e)
    out[e] = cache_.standard(coarse_, e, field_, n_sub_, config_.quadrature);
  return out;
}

BasisSet MultiscaleProblem::omega2_bases() {
  BasisSet out(coarse_.num_elements());
  for (int e = 0; e < coarse_.num_elements(); ++e) {
    if (split_.omega2(coarse_.square_of_element(e))) {
      out[e] = cache_.oversampling(coarse_, e, config_.oversampling_scale, split_, field_, n_sub_, config_.quadrature);
    }
  }
  return out;
}

BasisSet MultiscaleProblem::mixed_bases() {
  BasisSet out = omega2_bases();
  for (int e = 0; e < coarse_.num_elements(); ++e)
    if (!out[e]) out[e] = cache_.standard(coarse_, e, field_, n_sub_, config_.quadrature);
  return out;
}

FieldSolution MultiscaleProblem::solve_reference() {
  return mslab::solve_reference(reference_mesh(), field_, f_, config_.solver, config_.quadrature);
}

CoarseSolution MultiscaleProblem::solve_msfem(const BasisSet& bases) {
  const MsSystem ms = assemble_ms_global(coarse_, bases, f_, config_.quadrature);
  const AssembledSystem sys =
      apply_dirichlet(ms.matrix, ms.rhs, coarse_.domain_boundary_flags(), VectorXd::Zero(coarse_.num_nodes()));
  CoarseSolution sol;
  VectorXd x;
  sol.report = solve_spd(sys.matrix, sys.rhs, x, config_.solver);
  sol.coefficients = sys.expand(x);
  sol.bases = bases;
  return sol;
}

CoupledSystem MultiscaleProblem::assemble_coupled(const PenaltyParams& params, const InterfaceTerms& terms) {
  const double rho = resolve_rho(params, field_, fine_spacing());
  return assemble_fe_msfem(split_, fine(), coarse_, pairing(), omega2_bases(), field_, f_, params, rho,
                           config_.quadrature, terms);
}

CombinedSolution MultiscaleProblem::solve_fe_msfem(const PenaltyParams& params) {
  const CoupledSystem sys = assemble_coupled(params);
  CombinedSolution sol = solve_coupled(sys, fine(), coarse_, params.beta, config_.solver);
  sol.rho = resolve_rho(params, field_, fine_spacing());
  return sol;
}

}  // namespace mslab
