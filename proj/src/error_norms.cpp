#include "mslab/error_norms.hpp"

#include <cmath>
#include <stdexcept>

#include "mslab/exceptions.hpp"

namespace mslab {

namespace {

ProlongedField empty_field(const LatticeMesh& reference) {
  ProlongedField f;
  f.element_values = Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(reference.num_elements(), 3);
  f.nodal = VectorXd::Zero(reference.num_nodes());
  return f;
}

void store(ProlongedField& out, const LatticeMesh& reference, int e, const Eigen::Vector3d& v) {
  out.element_values.row(e) = v.transpose();
  const auto& nodes = reference.elements()[e];
  for (int k = 0; k < 3; ++k) out.nodal[nodes[k]] = v[k];
}

/// Values at the vertices of reference element e from a P1 field on `source`.
std::optional<Eigen::Vector3d> p1_values(const LatticeMesh& source, const VectorXd& values, const Triangle& t) {
  const auto loc = source.locate(barycenter(t));
  if (!loc) return std::nullopt;
  const Triangle s = source.triangle(loc->element);
  const auto& v = source.elements()[loc->element];
  const Eigen::Vector3d nodal(values[v[0]], values[v[1]], values[v[2]]);
  Eigen::Vector3d out;
  for (int k = 0; k < 3; ++k) out[k] = barycentric(s, t[k]).dot(nodal);
  return out;
}

Eigen::Vector3d ms_values(const CoarseMesh& coarse, const ElementBasis& basis, const VectorXd& coefficients,
                          int element, const Triangle& t) {
  const SubMesh& sm = basis.sub_mesh;
  const auto loc = sm.locate(barycenter(t));
  if (!loc) throw GeometryError("reference element outside its coarse element");
  const Triangle s = sm.triangle(loc->element);
  const auto& sv = sm.elements()[loc->element];
  const auto& cv = coarse.elements()[element];
  const Eigen::Vector3d c(coefficients[cv[0]], coefficients[cv[1]], coefficients[cv[2]]);
  // expansion value at each sub-triangle vertex
  Eigen::Vector3d sub;
  for (int k = 0; k < 3; ++k) sub[k] = basis.values.row(sv[k]).dot(c);
  Eigen::Vector3d out;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector3d lam = barycentric(s, t[k]);
    if (lam.minCoeff() < -1e-9) throw GeometryError("reference mesh does not nest in the basis sub-mesh");
    out[k] = lam.dot(sub);
  }
  return out;
}

void prolong_ms_into(const CoarseMesh& coarse, const BasisSet& bases, const VectorXd& coefficients,
                     const LatticeMesh& reference, ProlongedField& out) {
  for (int e = 0; e < reference.num_elements(); ++e) {
    const Triangle t = reference.triangle(e);
    const auto loc = coarse.locate(barycenter(t));
    if (!loc || !bases[loc->element]) continue;
    store(out, reference, e, ms_values(coarse, *bases[loc->element], coefficients, loc->element, t));
  }
}

}  // namespace

ProlongedField prolong(const LatticeMesh& reference, const VectorXd& nodal) {
  if (nodal.size() != reference.num_nodes()) throw std::invalid_argument("nodal vector does not match the mesh");
  ProlongedField f = empty_field(reference);
  f.nodal = nodal;
  for (int e = 0; e < reference.num_elements(); ++e) {
    const auto& v = reference.elements()[e];
    f.element_values.row(e) << nodal[v[0]], nodal[v[1]], nodal[v[2]];
  }
  return f;
}

void prolong_p1(const LatticeMesh& source, const VectorXd& values, const LatticeMesh& reference,
                ProlongedField& out) {
  if (reference.cells_per_side() % source.cells_per_side() != 0) {
    throw GeometryError("reference mesh is not nested in the source mesh");
  }
  for (int e = 0; e < reference.num_elements(); ++e) {
    const Triangle t = reference.triangle(e);
    if (const auto v = p1_values(source, values, t)) store(out, reference, e, *v);
  }
}

ProlongedField prolong(const CoarseMesh& coarse, const BasisSet& bases, const VectorXd& coefficients,
                       const LatticeMesh& reference) {
  ProlongedField f = empty_field(reference);
  prolong_ms_into(coarse, bases, coefficients, reference, f);
  return f;
}

ProlongedField prolong(const CombinedSolution& solution, const FineMesh& fine, const CoarseMesh& coarse,
                       const DomainSplit& split, const BasisSet& bases, const LatticeMesh& reference) {
  ProlongedField f = empty_field(reference);
  prolong_p1(fine.mesh, solution.fine_values, reference, f);
  BasisSet omega2(coarse.num_elements());
  for (int e = 0; e < coarse.num_elements(); ++e)
    if (split.omega2(coarse.square_of_element(e))) omega2[e] = bases.at(e);
  // written second so that interface nodes carry the Omega_2 value
  prolong_ms_into(coarse, omega2, solution.coarse_values, reference, f);
  return f;
}

NormContext::NormContext(const LatticeMesh& reference, const CoefficientField& field) : mesh_(&reference) {
  const int n = reference.num_elements();
  area_.resize(n);
  a_integral_.resize(n);
  gradients_.resize(n);
  for (int e = 0; e < n; ++e) {
    const Triangle t = reference.triangle(e);
    area_[e] = signed_area(t);
    a_integral_[e] = integrate(t, [&field](const Point& x) { return field(x); }, QuadratureRule::EdgeMidpoint);
    gradients_[e] = p1_gradients(t);
  }
}

double NormContext::l2(const ProlongedField& u) const {
  double s = 0.0;
  for (int e = 0; e < area_.size(); ++e) {
    const Eigen::RowVector3d v = u.element_values.row(e);
    // edge-midpoint rule
    const double m0 = 0.5 * (v[0] + v[1]), m1 = 0.5 * (v[1] + v[2]), m2 = 0.5 * (v[2] + v[0]);
    s += area_[e] / 3.0 * (m0 * m0 + m1 * m1 + m2 * m2);
  }
  return std::sqrt(s);
}

double NormContext::energy(const ProlongedField& u) const {
  double s = 0.0;
  for (int e = 0; e < area_.size(); ++e) {
    const Eigen::Vector2d g = gradients_[e].transpose() * u.element_values.row(e).transpose();
    s += a_integral_[e] * g.squaredNorm();
  }
  return std::sqrt(s);
}

double NormContext::linf(const ProlongedField& u) const { return u.nodal.lpNorm<Eigen::Infinity>(); }

namespace {

double relative(double err, double ref, const char* name) {
  if (ref > 0) return err / ref;
  if (err == 0) return 0.0;
  throw std::domain_error(std::string("reference solution has zero ") + name + " norm");
}

}  // namespace

ErrorReport norms(const ProlongedField& u, const ProlongedField& reference, const NormContext& ctx) {
  ProlongedField d;
  d.element_values = u.element_values - reference.element_values;
  d.nodal = u.nodal - reference.nodal;
  ErrorReport r;
  r.abs_l2 = ctx.l2(d);
  r.abs_linf = ctx.linf(d);
  r.abs_energy = ctx.energy(d);
  r.rel_l2 = relative(r.abs_l2, ctx.l2(reference), "L2");
  r.rel_linf = relative(r.abs_linf, ctx.linf(reference), "max");
  r.rel_energy = relative(r.abs_energy, ctx.energy(reference), "energy");
  r.reference_cells = ctx.mesh().cells_per_side();
  return r;
}

}  // namespace mslab
