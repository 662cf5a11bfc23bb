#pragma once

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <optional>
#include <vector>

namespace mslab {

using Point = Eigen::Vector2d;
using Triangle = std::array<Point, 3>;
using ElementNodes = std::array<int, 3>;

/// Integer coordinates (i, j) of a lattice square or lattice node.
struct Cell {
  int i = 0;
  int j = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Geometric coincidence tolerance, absolute, in coordinates.
inline constexpr double kGeometryTol = 1e-12;

double signed_area(const Triangle& t);
Point barycenter(const Triangle& t);
/// Barycentric coordinates of p with respect to t.
Eigen::Vector3d barycentric(const Triangle& t, const Point& p);

/// A point located inside a mesh element, with barycentric weights.
struct Location {
  int element = -1;
  Eigen::Vector3d weights = Eigen::Vector3d::Zero();
};

/// Plain triangle soup with counterclockwise elements.
class TriMesh {
 public:
  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<ElementNodes>& elements() const { return elements_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_elements() const { return static_cast<int>(elements_.size()); }
  Triangle triangle(int e) const {
    const auto& v = elements_[e];
    return {nodes_[v[0]], nodes_[v[1]], nodes_[v[2]]};
  }
  double total_area() const;

 protected:
  std::vector<Point> nodes_;
  std::vector<ElementNodes> elements_;
};

/// Uniform right-triangle triangulation of (0,1)^2 with `cells_per_side`
/// squares per side, restricted to a subset of squares. Each square (i,j)
/// splits along its lower-left to upper-right diagonal into
///   t = 0: (i,j), (i+1,j), (i+1,j+1)   (lower-right)
///   t = 1: (i,j), (i+1,j+1), (i,j+1)   (upper-left)
class LatticeMesh : public TriMesh {
 public:
  /// An empty mask keeps every square; otherwise mask[j * n + i] selects.
  explicit LatticeMesh(int cells_per_side, std::vector<char> square_mask = {});

  int cells_per_side() const { return n_; }
  double spacing() const { return 1.0 / n_; }
  bool has_square(int i, int j) const;
  Cell square_of_element(int e) const { return element_square_[e]; }
  int triangle_kind(int e) const { return element_kind_[e]; }
  /// Element index of triangle `t` of square (i,j), -1 when absent.
  int element_at(int i, int j, int t) const;
  /// Node index of lattice node (i,j), -1 when absent.
  int node_at(int i, int j) const;
  Cell lattice_of_node(int node) const { return node_lattice_[node]; }
  /// Node lies on the boundary of the unit square.
  bool on_domain_boundary(int node) const;
  std::vector<char> domain_boundary_flags() const;
  /// Element containing p (ties resolved toward the first present square).
  std::optional<Location> locate(const Point& p) const;

 private:
  int n_;
  std::vector<char> mask_;
  std::vector<int> node_index_;
  std::vector<int> element_index_;
  std::vector<Cell> node_lattice_;
  std::vector<Cell> element_square_;
  std::vector<int> element_kind_;
};

using CoarseMesh = LatticeMesh;

/// Coarse triangulation of the unit square; requires n_cells_per_side >= 4.
CoarseMesh build_coarse_mesh(int n_cells_per_side);

/// A coarse edge E on the interface between an Omega_1 cell and an Omega_2
/// cell. The normal points from Omega_1 into Omega_2.
struct InterfaceEdge {
  int node_a = -1;  // coarse node indices, a precedes b along the edge
  int node_b = -1;
  Cell omega1_cell;
  Cell omega2_cell;
  int coarse_element = -1;  // K_E, the Omega_2 triangle owning E
  Point normal = Point::Zero();
  double length = 0.0;
};

/// Partition of the coarse cells into the boundary frame Omega_1 and the
/// interior Omega_2.
struct DomainSplit {
  int cells_per_side = 0;
  int layers = 0;
  std::vector<char> in_omega2;  // per cell j * n + i
  std::vector<InterfaceEdge> gamma;
  /// (x0, y0, x1, y1) of the square interface when Omega_2 is a single block.
  std::optional<std::array<double, 4>> gamma_rect;

  bool omega2(int i, int j) const { return in_omega2[j * cells_per_side + i] != 0; }
  bool omega2(const Cell& c) const { return omega2(c.i, c.j); }
  int omega2_cell_count() const;
  double gamma_length() const;
  std::vector<Cell> omega1_cells() const;
  std::vector<Cell> omega2_cells() const;
};

/// Cells at Chebyshev distance >= layers from the boundary ring form Omega_2.
DomainSplit split_domain(const CoarseMesh& mesh, int layers);

/// Moves the listed cells into Omega_1 and rebuilds the interface.
DomainSplit absorb_cells(const DomainSplit& split, const CoarseMesh& mesh, const std::vector<Cell>& cells);

/// A fine edge e on Gamma and the Omega_1 fine triangle K_e owning it.
struct FineEdge {
  int node_a = -1;
  int node_b = -1;
  int element = -1;
  int coarse_edge = -1;  // index into DomainSplit::gamma
};

/// Fine triangulation of the closure of Omega_1.
struct FineMesh {
  LatticeMesh mesh;
  int refinement = 1;            // H / h
  std::vector<char> dirichlet;   // nodes on the boundary of the unit square
  std::vector<char> on_gamma;    // nodes on the interface
  std::vector<FineEdge> gamma_edges;
};

/// Requires n_h to be a multiple of the coarse cell count.
FineMesh build_frame_fine_mesh(const DomainSplit& split, int n_h);

struct PairingEntry {
  int fine_node_a = -1;
  int fine_node_b = -1;
  int fine_element = -1;    // K_e in Omega_1
  int coarse_edge = -1;     // E, index into DomainSplit::gamma
  int coarse_element = -1;  // K_E in Omega_2
  Point normal = Point::Zero();  // from Omega_1 to Omega_2
  double length = 0.0;           // h_e
};

struct InterfacePairing {
  std::vector<PairingEntry> entries;
};

InterfacePairing pair_interface(const DomainSplit& split, const FineMesh& fine, const CoarseMesh& coarse);

/// Uniform refinement of a triangle into n_sub^2 congruent sub-triangles.
/// Nodes are indexed by barycentric lattice coordinates (a, b), a + b <= n,
/// at parent[0] + a/n (parent[1]-parent[0]) + b/n (parent[2]-parent[0]).
class SubMesh : public TriMesh {
 public:
  SubMesh(const Triangle& parent, int n_sub);

  const Triangle& parent() const { return parent_; }
  int subdivisions() const { return n_; }
  const std::vector<char>& boundary_nodes() const { return boundary_; }
  int node_at(int a, int b) const;
  Cell lattice_of_node(int node) const { return lattice_[node]; }
  /// Index of the upward (a,b),(a+1,b),(a,b+1) or downward sub-triangle.
  int upward_element(int a, int b) const;
  int downward_element(int a, int b) const;
  std::optional<Location> locate(const Point& p, double tol = 1e-9) const;
  /// The unique sub-triangle having boundary edge (node_a, node_b).
  int boundary_edge_element(int node_a, int node_b) const;

 private:
  int row_start(int b) const { return b * (2 * n_ - 1) - b * (b - 1); }

  Triangle parent_;
  int n_;
  std::vector<char> boundary_;
  std::vector<Cell> lattice_;
};

SubMesh refine_triangle(const Triangle& parent, int n_sub);

/// Simplex S containing K: K dilated about its barycenter by `scale`.
struct OversamplingPatch {
  int base_element = -1;
  double scale = 3.0;
  Triangle base;
  Triangle patch;
};

/// Rejects scale <= 1, elements outside Omega_2 and patches leaving the
/// closed unit square.
OversamplingPatch make_oversampling_patch(const CoarseMesh& mesh, int element, double scale,
                                          const DomainSplit& split);

/// `nodes:` then `elements:` listing, one entry per line.
void write_mesh_dump(std::ostream& os, const TriMesh& mesh);

}  // namespace mslab
