#include "mslab/msbasis.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "mslab/exceptions.hpp"

namespace mslab {

const char* to_string(BasisKind kind) { return kind == BasisKind::Standard ? "standard" : "oversampling"; }

Eigen::Vector2d ElementBasis::gradient(int i, int sub_element) const {
  const auto g = p1_gradients(sub_mesh.triangle(sub_element));
  const auto& v = sub_mesh.elements()[sub_element];
  return g.transpose() * Eigen::Vector3d(values(v[0], i), values(v[1], i), values(v[2], i));
}

Eigen::Vector3d ElementBasis::values_at(const Point& p) const {
  const auto loc = sub_mesh.locate(p);
  if (!loc) throw GeometryError("point outside the element of this basis");
  const auto& v = sub_mesh.elements()[loc->element];
  Eigen::Vector3d out = Eigen::Vector3d::Zero();
  for (int k = 0; k < 3; ++k) out += loc->weights[k] * values.row(v[k]).transpose();
  return out;
}

double ElementBasis::value(int i, const Point& p) const { return values_at(p)[i]; }

namespace {

/// Nodal values of the three hats of `t` on the nodes of `m`.
BasisValues hat_values(const TriMesh& m, const Triangle& t) {
  BasisValues h(m.num_nodes(), 3);
  for (int v = 0; v < m.num_nodes(); ++v) h.row(v) = barycentric(t, m.nodes()[v]).transpose();
  return h;
}

/// Solves the three a-harmonic problems on `m` with boundary data `data`.
BasisValues harmonic_extension(const SubMesh& m, const SparseMatrixd& A, const BasisValues& data) {
  const auto& boundary = m.boundary_nodes();
  std::vector<int> free_index(m.num_nodes(), -1), free_nodes;
  for (int v = 0; v < m.num_nodes(); ++v) {
    if (!boundary[v]) {
      free_index[v] = static_cast<int>(free_nodes.size());
      free_nodes.push_back(v);
    }
  }
  const int nf = static_cast<int>(free_nodes.size());
  BasisValues out = data;
  if (nf == 0) return out;
  std::vector<Tripletd> trip;
  MatrixXd rhs = MatrixXd::Zero(nf, 3);
  for (int k = 0; k < nf; ++k) {
    for (SparseMatrixd::InnerIterator it(A, free_nodes[k]); it; ++it) {
      const int col = static_cast<int>(it.col());
      if (free_index[col] >= 0) {
        trip.emplace_back(k, free_index[col], it.value());
      } else {
        rhs.row(k) -= it.value() * data.row(col);
      }
    }
  }
  const MatrixXd x = solve_spd_multi(from_triplets(nf, nf, trip), rhs);
  for (int k = 0; k < nf; ++k) out.row(free_nodes[k]) = x.row(k);
  return out;
}

Eigen::Matrix3d local_stiffness(const SparseMatrixd& A, const BasisValues& V) {
  const Eigen::Matrix3d k = V.transpose() * (A * V);
  return 0.5 * (k + k.transpose());
}

}  // namespace

ElementBasis build_standard_basis(const Triangle& K, const CoefficientField& field, int n_sub, QuadratureRule rule) {
  if (n_sub < 2) throw std::invalid_argument("multiscale basis needs n_sub >= 2");
  ElementBasis b{-1, BasisKind::Standard, SubMesh(K, n_sub), {}, Eigen::Matrix3d::Identity(), std::nullopt, 0,
                 Eigen::Matrix3d::Zero()};
  const SparseMatrixd A = assemble_stiffness(b.sub_mesh, field, rule);
  b.values = harmonic_extension(b.sub_mesh, A, hat_values(b.sub_mesh, K));
  b.stiffness = local_stiffness(A, b.values);
  return b;
}

ElementBasis build_standard_basis(const CoarseMesh& mesh, int element, const CoefficientField& field, int n_sub,
                                  QuadratureRule rule) {
  ElementBasis b = build_standard_basis(mesh.triangle(element), field, n_sub, rule);
  b.element = element;
  return b;
}

int patch_refinement(double scale, int n_sub) {
  auto integral = [](double v) { return std::abs(v - std::round(v)) < 1e-9; };
  for (int q = 1; q <= 64; ++q) {
    if (integral(scale * q * n_sub) && integral((scale - 1.0) * q * n_sub / 3.0)) return q;
  }
  throw GeometryError("no patch refinement aligns the oversampling lattice with the element sub-mesh");
}

Eigen::Matrix3d compute_cij(const Triangle& K, const Triangle& S) {
  Eigen::Matrix3d M;
  for (int k = 0; k < 3; ++k) M.col(k) = barycentric(S, K[k]);
  if (std::abs(M.determinant()) < 1e-14) throw GeometryError("singular oversampling combination matrix");
  return M.inverse();
}

ElementBasis build_oversampling_basis(const OversamplingPatch& patch,
                                      const CoefficientField& field, int n_sub, QuadratureRule rule) {
  if (n_sub < 2) throw std::invalid_argument("multiscale basis needs n_sub >= 2");
  const int q = patch_refinement(patch.scale, n_sub);
  const int np = static_cast<int>(std::lround(patch.scale * q * n_sub));
  const int off = static_cast<int>(std::lround((patch.scale - 1.0) * q * n_sub / 3.0));

  const SubMesh S(patch.patch, np);
  const SparseMatrixd AS = assemble_stiffness(S, field, rule);
  const BasisValues psiS = harmonic_extension(S, AS, hat_values(S, patch.patch));

  ElementBasis b{patch.base_element, BasisKind::Oversampling, SubMesh(patch.base, n_sub), {},
                 compute_cij(patch.base, patch.patch), patch, np, Eigen::Matrix3d::Zero()};
  b.values.resize(b.sub_mesh.num_nodes(), 3);
  for (int v = 0; v < b.sub_mesh.num_nodes(); ++v) {
    const Cell ab = b.sub_mesh.lattice_of_node(v);
    const int w = S.node_at(ab.i * q + off, ab.j * q + off);
    if ((S.nodes()[w] - b.sub_mesh.nodes()[v]).lpNorm<Eigen::Infinity>() > 1e-12) {
      throw GeometryError("oversampling lattice is not aligned with the element sub-mesh");
    }
    b.values.row(v) = psiS.row(w) * b.cij.transpose();
  }
  b.stiffness = local_stiffness(assemble_stiffness(b.sub_mesh, field, rule), b.values);
  return b;
}

double pi_projection(const ElementBasis& basis, const Eigen::Vector3d& coeffs, const Point& x) {
  return coeffs.dot(barycentric(basis.sub_mesh.parent(), x));
}

double hat_combination(const ElementBasis& basis, int i, const Point& x) {
  if (!basis.patch) return barycentric(basis.sub_mesh.parent(), x)[i];
  return basis.cij.row(i).dot(barycentric(basis.patch->patch, x));
}

MsSystem assemble_ms_global(const CoarseMesh& mesh, const BasisSet& bases, const SourceFunction& f,
                            QuadratureRule rule) {
  if (static_cast<int>(bases.size()) != mesh.num_elements()) {
    throw std::invalid_argument("basis set does not match the coarse mesh");
  }
  std::vector<Tripletd> trip;
  MsSystem s;
  s.rhs = VectorXd::Zero(mesh.num_nodes());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    if (!bases[e]) continue;
    const ElementBasis& b = *bases[e];
    const auto& v = mesh.elements()[e];
    const Eigen::Vector3d load = b.values.transpose() * assemble_load(b.sub_mesh, f, rule);
    for (int r = 0; r < 3; ++r) {
      s.rhs[v[r]] += load[r];
      for (int c = 0; c < 3; ++c) trip.emplace_back(v[r], v[c], b.stiffness(r, c));
    }
  }
  s.matrix = from_triplets(mesh.num_nodes(), mesh.num_nodes(), trip);
  return s;
}

namespace {

std::string cache_key(const CoefficientField& field, int element, BasisKind kind, int n_sub, double scale,
                      QuadratureRule rule) {
  std::ostringstream os;
  os << std::setprecision(17) << field.describe() << '|' << element << '|' << to_string(kind) << '|' << n_sub << '|'
     << scale << '|' << static_cast<int>(rule);
  return os.str();
}

}  // namespace

std::shared_ptr<const ElementBasis> BasisCache::standard(const CoarseMesh& mesh, int element,
                                                         const CoefficientField& field, int n_sub,
                                                         QuadratureRule rule) {
  // the element index alone is ambiguous across meshes, so the mesh size joins the key
  const std::string key =
      cache_key(field, element, BasisKind::Standard, n_sub, 0.0, rule) + '|' + std::to_string(mesh.cells_per_side());
  auto& slot = store_[key];
  if (!slot) {
    slot = std::make_shared<const ElementBasis>(build_standard_basis(mesh, element, field, n_sub, rule));
    ++builds_;
  }
  return slot;
}

std::shared_ptr<const ElementBasis> BasisCache::oversampling(const CoarseMesh& mesh, int element, double scale,
                                                             const DomainSplit& split, const CoefficientField& field,
                                                             int n_sub, QuadratureRule rule) {
  const std::string key = cache_key(field, element, BasisKind::Oversampling, n_sub, scale, rule) + '|' +
                          std::to_string(mesh.cells_per_side());
  auto& slot = store_[key];
  if (!slot) {
    const OversamplingPatch patch = make_oversampling_patch(mesh, element, scale, split);
    slot = std::make_shared<const ElementBasis>(build_oversampling_basis(patch, field, n_sub, rule));
    ++builds_;
  }
  return slot;
}

void write_basis_dump(std::ostream& os, const ElementBasis& basis) {
  os << std::setprecision(17);
  for (int v = 0; v < basis.sub_mesh.num_nodes(); ++v) {
    const Point& p = basis.sub_mesh.nodes()[v];
    os << p.x() << ' ' << p.y() << ' ' << basis.values(v, 0) << ' ' << basis.values(v, 1) << ' ' << basis.values(v, 2)
       << '\n';
  }
}

}  // namespace mslab
