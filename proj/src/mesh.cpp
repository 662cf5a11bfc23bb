#include "mslab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <string>

#include "mslab/exceptions.hpp"

namespace mslab {

double signed_area(const Triangle& t) {
  const Point a = t[1] - t[0], b = t[2] - t[0];
  return 0.5 * (a.x() * b.y() - a.y() * b.x());
}

Point barycenter(const Triangle& t) { return (t[0] + t[1] + t[2]) / 3.0; }

Eigen::Vector3d barycentric(const Triangle& t, const Point& p) {
  Eigen::Matrix2d J;
  J.col(0) = t[1] - t[0];
  J.col(1) = t[2] - t[0];
  const Eigen::Vector2d st = J.inverse() * (p - t[0]);
  return {1.0 - st.x() - st.y(), st.x(), st.y()};
}

double TriMesh::total_area() const {
  double s = 0.0;
  for (int e = 0; e < num_elements(); ++e) s += signed_area(triangle(e));
  return s;
}

// ---------------------------------------------------------------------------
// LatticeMesh

LatticeMesh::LatticeMesh(int cells_per_side, std::vector<char> square_mask)
    : n_(cells_per_side), mask_(std::move(square_mask)) {
  if (n_ < 1) throw GeometryError("lattice mesh needs at least one cell per side");
  const int n = n_;
  if (mask_.empty()) mask_.assign(static_cast<size_t>(n) * n, 1);
  if (static_cast<int>(mask_.size()) != n * n) throw GeometryError("square mask has wrong size");

  node_index_.assign(static_cast<size_t>(n + 1) * (n + 1), -1);
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      bool used = false;
      for (int dj = -1; dj <= 0 && !used; ++dj)
        for (int di = -1; di <= 0 && !used; ++di) used = has_square(i + di, j + dj);
      if (!used) continue;
      node_index_[j * (n + 1) + i] = static_cast<int>(nodes_.size());
      nodes_.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
      node_lattice_.push_back({i, j});
    }
  }
  element_index_.assign(static_cast<size_t>(n) * n * 2, -1);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (!has_square(i, j)) continue;
      const int v00 = node_at(i, j), v10 = node_at(i + 1, j), v11 = node_at(i + 1, j + 1), v01 = node_at(i, j + 1);
      element_index_[(j * n + i) * 2 + 0] = static_cast<int>(elements_.size());
      elements_.push_back({v00, v10, v11});
      element_square_.push_back({i, j});
      element_kind_.push_back(0);
      element_index_[(j * n + i) * 2 + 1] = static_cast<int>(elements_.size());
      elements_.push_back({v00, v11, v01});
      element_square_.push_back({i, j});
      element_kind_.push_back(1);
    }
  }
}

bool LatticeMesh::has_square(int i, int j) const {
  if (i < 0 || j < 0 || i >= n_ || j >= n_) return false;
  return mask_[j * n_ + i] != 0;
}

int LatticeMesh::element_at(int i, int j, int t) const {
  if (i < 0 || j < 0 || i >= n_ || j >= n_) return -1;
  return element_index_[(j * n_ + i) * 2 + t];
}

int LatticeMesh::node_at(int i, int j) const {
  if (i < 0 || j < 0 || i > n_ || j > n_) return -1;
  return node_index_[j * (n_ + 1) + i];
}

bool LatticeMesh::on_domain_boundary(int node) const {
  const Cell c = node_lattice_[node];
  return c.i == 0 || c.j == 0 || c.i == n_ || c.j == n_;
}

std::vector<char> LatticeMesh::domain_boundary_flags() const {
  std::vector<char> flags(nodes_.size(), 0);
  for (int v = 0; v < num_nodes(); ++v) flags[v] = on_domain_boundary(v) ? 1 : 0;
  return flags;
}

std::optional<Location> LatticeMesh::locate(const Point& p) const {
  constexpr double tol = 1e-9;
  const double x = p.x() * n_, y = p.y() * n_;
  auto candidates = [&](double u) {
    std::array<int, 2> c{static_cast<int>(std::floor(u)), static_cast<int>(std::floor(u))};
    const double r = std::round(u);
    if (std::abs(u - r) < tol) c = {static_cast<int>(r) - 1, static_cast<int>(r)};
    return c;
  };
  for (int j : candidates(y)) {
    for (int i : candidates(x)) {
      if (!has_square(i, j)) continue;
      const double s = x - i, t = y - j;
      if (s < -tol || s > 1 + tol || t < -tol || t > 1 + tol) continue;
      Location loc;
      if (t <= s + tol) {
        loc.element = element_at(i, j, 0);
        loc.weights = {1.0 - s, s - t, t};
      } else {
        loc.element = element_at(i, j, 1);
        loc.weights = {1.0 - t, s, t - s};
      }
      if (loc.weights.minCoeff() >= -tol) return loc;
    }
  }
  return std::nullopt;
}

CoarseMesh build_coarse_mesh(int n_cells_per_side) {
  if (n_cells_per_side < 4) {
    throw GeometryError("coarse mesh needs at least 4 cells per side to host a two-layer frame, got " +
                        std::to_string(n_cells_per_side));
  }
  return CoarseMesh(n_cells_per_side);
}

// ---------------------------------------------------------------------------
// DomainSplit

int DomainSplit::omega2_cell_count() const {
  return static_cast<int>(std::count(in_omega2.begin(), in_omega2.end(), 1));
}

double DomainSplit::gamma_length() const {
  double s = 0.0;
  for (const auto& e : gamma) s += e.length;
  return s;
}

std::vector<Cell> DomainSplit::omega1_cells() const {
  std::vector<Cell> out;
  for (int j = 0; j < cells_per_side; ++j)
    for (int i = 0; i < cells_per_side; ++i)
      if (!omega2(i, j)) out.push_back({i, j});
  return out;
}

std::vector<Cell> DomainSplit::omega2_cells() const {
  std::vector<Cell> out;
  for (int j = 0; j < cells_per_side; ++j)
    for (int i = 0; i < cells_per_side; ++i)
      if (omega2(i, j)) out.push_back({i, j});
  return out;
}

namespace {

void rebuild_gamma(DomainSplit& split, const CoarseMesh& mesh) {
  const int n = split.cells_per_side;
  const double H = 1.0 / n;
  split.gamma.clear();
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (!split.omega2(i, j)) continue;
      if (i == 0 || j == 0 || i == n - 1 || j == n - 1) {
        throw GeometryError("Omega_2 cell touches the domain boundary");
      }
      struct Side {
        Cell neighbour;
        Cell a, b;
        int t;
        Point normal;
      };
      const Side sides[4] = {
          {{i, j - 1}, {i, j}, {i + 1, j}, 0, {0.0, 1.0}},           // bottom
          {{i + 1, j}, {i + 1, j}, {i + 1, j + 1}, 0, {-1.0, 0.0}},  // right
          {{i, j + 1}, {i, j + 1}, {i + 1, j + 1}, 1, {0.0, -1.0}},  // top
          {{i - 1, j}, {i, j}, {i, j + 1}, 1, {1.0, 0.0}},           // left
      };
      for (const auto& s : sides) {
        if (split.omega2(s.neighbour)) continue;
        InterfaceEdge e;
        e.node_a = mesh.node_at(s.a.i, s.a.j);
        e.node_b = mesh.node_at(s.b.i, s.b.j);
        e.omega1_cell = s.neighbour;
        e.omega2_cell = {i, j};
        e.coarse_element = mesh.element_at(i, j, s.t);
        e.normal = s.normal;
        e.length = H;
        split.gamma.push_back(e);
      }
    }
  }
}

}  // namespace

DomainSplit split_domain(const CoarseMesh& mesh, int layers) {
  const int n = mesh.cells_per_side();
  if (layers < 1) throw GeometryError("layers must be positive");
  if (2 * layers >= n) {
    throw GeometryError("split with " + std::to_string(layers) + " layers leaves no interior cells on a " +
                        std::to_string(n) + "x" + std::to_string(n) + " coarse mesh");
  }
  DomainSplit split;
  split.cells_per_side = n;
  split.layers = layers;
  split.in_omega2.assign(static_cast<size_t>(n) * n, 0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int dist = std::min({i, j, n - 1 - i, n - 1 - j});
      split.in_omega2[j * n + i] = dist >= layers ? 1 : 0;
    }
  }
  const double off = static_cast<double>(layers) / n;
  split.gamma_rect = std::array<double, 4>{off, off, 1.0 - off, 1.0 - off};
  rebuild_gamma(split, mesh);
  return split;
}

DomainSplit absorb_cells(const DomainSplit& split, const CoarseMesh& mesh, const std::vector<Cell>& cells) {
  DomainSplit out = split;
  bool changed = false;
  for (const auto& c : cells) {
    if (c.i < 0 || c.j < 0 || c.i >= out.cells_per_side || c.j >= out.cells_per_side) continue;
    auto& flag = out.in_omega2[c.j * out.cells_per_side + c.i];
    changed = changed || flag != 0;
    flag = 0;
  }
  if (out.omega2_cell_count() == 0) throw GeometryError("absorbing cells into Omega_1 left Omega_2 empty");
  if (changed) out.gamma_rect.reset();
  rebuild_gamma(out, mesh);
  return out;
}

// ---------------------------------------------------------------------------
// Fine frame mesh and pairing

FineMesh build_frame_fine_mesh(const DomainSplit& split, int n_h) {
  const int n = split.cells_per_side;
  if (n_h <= 0 || n_h % n != 0) {
    throw GeometryError("fine cell count " + std::to_string(n_h) + " is not a multiple of the coarse cell count " +
                        std::to_string(n) + " (interface matching condition)");
  }
  const int r = n_h / n;
  if (r < 2) throw GeometryError("fine mesh must be strictly finer than the coarse mesh");
  std::vector<char> mask(static_cast<size_t>(n_h) * n_h, 0);
  for (int J = 0; J < n_h; ++J)
    for (int I = 0; I < n_h; ++I) mask[J * n_h + I] = split.omega2(I / r, J / r) ? 0 : 1;

  FineMesh fine{LatticeMesh(n_h, std::move(mask)), r, {}, {}, {}};
  const auto& m = fine.mesh;
  fine.dirichlet = m.domain_boundary_flags();
  fine.on_gamma.assign(m.nodes().size(), 0);

  for (int g = 0; g < static_cast<int>(split.gamma.size()); ++g) {
    const auto& E = split.gamma[g];
    const Cell c = E.omega2_cell;
    for (int k = 0; k < r; ++k) {
      Cell a, b, sq;
      int t;
      if (E.normal.y() > 0.5) {  // bottom side of the Omega_2 cell
        a = {c.i * r + k, c.j * r};
        b = {a.i + 1, a.j};
        sq = {a.i, a.j - 1};
        t = 1;
      } else if (E.normal.x() < -0.5) {  // right side
        a = {(c.i + 1) * r, c.j * r + k};
        b = {a.i, a.j + 1};
        sq = {a.i, a.j};
        t = 1;
      } else if (E.normal.y() < -0.5) {  // top side
        a = {c.i * r + k, (c.j + 1) * r};
        b = {a.i + 1, a.j};
        sq = {a.i, a.j};
        t = 0;
      } else {  // left side
        a = {c.i * r, c.j * r + k};
        b = {a.i, a.j + 1};
        sq = {a.i - 1, a.j};
        t = 0;
      }
      FineEdge fe;
      fe.node_a = m.node_at(a.i, a.j);
      fe.node_b = m.node_at(b.i, b.j);
      fe.element = m.element_at(sq.i, sq.j, t);
      fe.coarse_edge = g;
      if (fe.node_a < 0 || fe.node_b < 0 || fe.element < 0) {
        throw GeometryError("fine mesh does not reach interface edge " + std::to_string(g));
      }
      fine.on_gamma[fe.node_a] = fine.on_gamma[fe.node_b] = 1;
      fine.gamma_edges.push_back(fe);
    }
  }
  return fine;
}

InterfacePairing pair_interface(const DomainSplit& split, const FineMesh& fine, const CoarseMesh& coarse) {
  InterfacePairing pairing;
  std::vector<double> covered(split.gamma.size(), 0.0);
  const auto& fm = fine.mesh;
  for (const auto& fe : fine.gamma_edges) {
    if (fe.coarse_edge < 0 || fe.coarse_edge >= static_cast<int>(split.gamma.size())) {
      throw GeometryError("fine interface edge refers to an unknown coarse edge");
    }
    const auto& E = split.gamma[fe.coarse_edge];
    const Point A = coarse.nodes()[E.node_a], B = coarse.nodes()[E.node_b];
    const Point pa = fm.nodes()[fe.node_a], pb = fm.nodes()[fe.node_b];
    const Point dir = (B - A) / E.length;
    for (const Point& p : {pa, pb}) {
      const Point d = p - A;
      const double along = d.dot(dir);
      const double off = std::abs(d.x() * dir.y() - d.y() * dir.x());
      if (off > kGeometryTol || along < -kGeometryTol || along > E.length + kGeometryTol) {
        throw GeometryError("fine interface node (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) +
                            ") does not lie on its coarse edge");
      }
    }
    const auto& tri = fm.elements()[fe.element];
    auto in_tri = [&](int v) { return std::find(tri.begin(), tri.end(), v) != tri.end(); };
    if (!in_tri(fe.node_a) || !in_tri(fe.node_b)) throw GeometryError("fine interface edge not owned by K_e");

    PairingEntry entry;
    entry.fine_node_a = fe.node_a;
    entry.fine_node_b = fe.node_b;
    entry.fine_element = fe.element;
    entry.coarse_edge = fe.coarse_edge;
    entry.coarse_element = E.coarse_element;
    entry.normal = E.normal;
    entry.length = (pb - pa).norm();
    covered[fe.coarse_edge] += entry.length;
    pairing.entries.push_back(entry);
  }
  for (size_t g = 0; g < split.gamma.size(); ++g) {
    if (std::abs(covered[g] - split.gamma[g].length) > kGeometryTol) {
      throw GeometryError("fine edges do not tile coarse interface edge " + std::to_string(g));
    }
  }
  return pairing;
}

// ---------------------------------------------------------------------------
// SubMesh

SubMesh::SubMesh(const Triangle& parent, int n_sub) : parent_(parent), n_(n_sub) {
  if (n_sub < 1) throw GeometryError("refine_triangle needs n_sub >= 1");
  if (signed_area(parent) <= 0) throw GeometryError("parent triangle must be counterclockwise and nondegenerate");
  const Point e1 = (parent[1] - parent[0]) / n_, e2 = (parent[2] - parent[0]) / n_;
  for (int b = 0; b <= n_; ++b) {
    for (int a = 0; a + b <= n_; ++a) {
      nodes_.push_back(parent[0] + a * e1 + b * e2);
      lattice_.push_back({a, b});
      boundary_.push_back(a == 0 || b == 0 || a + b == n_ ? 1 : 0);
    }
  }
  for (int b = 0; b < n_; ++b) {
    for (int a = 0; a + b < n_; ++a) {
      elements_.push_back({node_at(a, b), node_at(a + 1, b), node_at(a, b + 1)});
      if (a + b <= n_ - 2) elements_.push_back({node_at(a + 1, b), node_at(a + 1, b + 1), node_at(a, b + 1)});
    }
  }
}

int SubMesh::node_at(int a, int b) const { return b * (n_ + 1) - b * (b - 1) / 2 + a; }

int SubMesh::upward_element(int a, int b) const { return row_start(b) + 2 * a; }

int SubMesh::downward_element(int a, int b) const { return row_start(b) + 2 * a + 1; }

std::optional<Location> SubMesh::locate(const Point& p, double tol) const {
  Eigen::Matrix2d J;
  J.col(0) = (parent_[1] - parent_[0]) / n_;
  J.col(1) = (parent_[2] - parent_[0]) / n_;
  const Eigen::Vector2d ab = J.inverse() * (p - parent_[0]);
  const double s = ab.x(), t = ab.y();
  if (s < -tol || t < -tol || s + t > n_ + tol) return std::nullopt;
  int a0 = std::clamp(static_cast<int>(std::floor(s)), 0, n_ - 1);
  int b0 = std::clamp(static_cast<int>(std::floor(t)), 0, n_ - 1);
  if (a0 + b0 > n_ - 1) a0 = n_ - 1 - b0;
  if (a0 < 0) {
    a0 = 0;
    b0 = n_ - 1;
  }
  const double fs = s - a0, ft = t - b0;
  Location loc;
  if (fs + ft <= 1.0 || a0 + b0 > n_ - 2) {
    loc.element = upward_element(a0, b0);
    loc.weights = {1.0 - fs - ft, fs, ft};
  } else {
    loc.element = downward_element(a0, b0);
    loc.weights = {1.0 - ft, fs + ft - 1.0, 1.0 - fs};
  }
  if (loc.weights.minCoeff() < -tol) return std::nullopt;
  return loc;
}

int SubMesh::boundary_edge_element(int node_a, int node_b) const {
  const Cell p = lattice_[node_a], q = lattice_[node_b];
  if (p.j == 0 && q.j == 0 && std::abs(p.i - q.i) == 1) return upward_element(std::min(p.i, q.i), 0);
  if (p.i == 0 && q.i == 0 && std::abs(p.j - q.j) == 1) return upward_element(0, std::min(p.j, q.j));
  if (p.i + p.j == n_ && q.i + q.j == n_ && std::abs(p.j - q.j) == 1) {
    const int b = std::min(p.j, q.j);
    return upward_element(n_ - 1 - b, b);
  }
  throw GeometryError("nodes do not form a boundary edge of the sub-mesh");
}

SubMesh refine_triangle(const Triangle& parent, int n_sub) { return SubMesh(parent, n_sub); }

// ---------------------------------------------------------------------------
// Oversampling patch

OversamplingPatch make_oversampling_patch(const CoarseMesh& mesh, int element, double scale,
                                          const DomainSplit& split) {
  if (!(scale > 1.0)) {
    throw GeometryError("oversampling scale must exceed 1 (dist(K, boundary of S) would vanish)");
  }
  if (!split.omega2(mesh.square_of_element(element))) {
    throw GeometryError("oversampling patch requested for element " + std::to_string(element) +
                        " outside Omega_2");
  }
  OversamplingPatch p;
  p.base_element = element;
  p.scale = scale;
  p.base = mesh.triangle(element);
  const Point c = barycenter(p.base);
  for (int k = 0; k < 3; ++k) {
    p.patch[k] = c + scale * (p.base[k] - c);
    const Point& v = p.patch[k];
    if (v.x() < -kGeometryTol || v.y() < -kGeometryTol || v.x() > 1 + kGeometryTol || v.y() > 1 + kGeometryTol) {
      throw GeometryError("oversampling patch of element " + std::to_string(element) +
                          " leaves the domain; increase layers or reduce the oversampling scale");
    }
  }
  return p;
}

void write_mesh_dump(std::ostream& os, const TriMesh& mesh) {
  os << "nodes:\n" << std::setprecision(17);
  for (int v = 0; v < mesh.num_nodes(); ++v) os << v << ' ' << mesh.nodes()[v].x() << ' ' << mesh.nodes()[v].y() << '\n';
  os << "elements:\n";
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.elements()[e];
    os << e << ' ' << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
}

}  // namespace mslab
