#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "mslab/mesh.hpp"

using namespace mslab;

TEST_CASE("coarse mesh counts and areas") {
  CHECK_THROWS(build_coarse_mesh(2));
  const CoarseMesh m32 = build_coarse_mesh(32);
  CHECK(m32.num_elements() == 2048);
  CHECK(m32.num_nodes() == 1089);
  const CoarseMesh m4 = build_coarse_mesh(4);
  for (int e = 0; e < m4.num_elements(); ++e) CHECK(signed_area(m4.triangle(e)) == doctest::Approx(1.0 / 32).epsilon(1e-14));
}

TEST_CASE("each square splits along the lower-left to upper-right diagonal") {
  const CoarseMesh m = build_coarse_mesh(6);
  const double H = 1.0 / 6;
  for (int j = 0; j < 6; ++j) {
    for (int i = 0; i < 6; ++i) {
      for (int t = 0; t < 2; ++t) {
        const Triangle tri = m.triangle(m.element_at(i, j, t));
        int ll = 0, ur = 0;
        for (const Point& p : tri) {
          ll += (p - Point(i * H, j * H)).norm() < 1e-15;
          ur += (p - Point((i + 1) * H, (j + 1) * H)).norm() < 1e-15;
        }
        CHECK(ll == 1);
        CHECK(ur == 1);
        CHECK(signed_area(tri) > 0);
      }
    }
  }
}

TEST_CASE("domain split") {
  const CoarseMesh m32 = build_coarse_mesh(32);
  const DomainSplit s = split_domain(m32, 2);
  CHECK(s.gamma_length() == doctest::Approx(3.5).epsilon(1e-14));
  REQUIRE(s.gamma_rect);
  CHECK((*s.gamma_rect)[0] == doctest::Approx(1.0 / 16));
  CHECK((*s.gamma_rect)[3] == doctest::Approx(15.0 / 16));

  CHECK(split_domain(build_coarse_mesh(8), 2).omega2_cell_count() == 16);
  CHECK(split_domain(build_coarse_mesh(5), 2).omega2_cell_count() == 1);
  CHECK_THROWS(split_domain(build_coarse_mesh(4), 2));

  // Chebyshev distance oracle
  const CoarseMesh m9 = build_coarse_mesh(9);
  for (int layers = 1; layers <= 4; ++layers) {
    const DomainSplit sp = split_domain(m9, layers);
    for (int j = 0; j < 9; ++j) {
      for (int i = 0; i < 9; ++i) {
        const int d = std::min({i, j, 8 - i, 8 - j});
        CHECK(sp.omega2(i, j) == (d >= layers));
      }
    }
    CHECK(sp.omega1_cells().size() + sp.omega2_cells().size() == 81u);
  }
}

TEST_CASE("frame fine mesh") {
  const CoarseMesh m32 = build_coarse_mesh(32);
  const DomainSplit s32 = split_domain(m32, 2);
  CHECK_THROWS(build_frame_fine_mesh(s32, 1000));
  const FineMesh f32 = build_frame_fine_mesh(s32, 1024);
  std::map<int, int> per_edge;
  for (const auto& e : f32.gamma_edges) ++per_edge[e.coarse_edge];
  CHECK(per_edge.size() == s32.gamma.size());
  for (const auto& [edge, count] : per_edge) CHECK(count == 32);

  // brute-force lattice count: nodes of the closure of the frame
  const CoarseMesh m8 = build_coarse_mesh(8);
  const DomainSplit s8 = split_domain(m8, 2);
  const FineMesh f8 = build_frame_fine_mesh(s8, 64);
  int expected = 0;
  for (int j = 0; j <= 64; ++j)
    for (int i = 0; i <= 64; ++i) {
      bool touches_frame = false;
      for (int dj = -1; dj <= 0; ++dj)
        for (int di = -1; di <= 0; ++di) {
          const int si = i + di, sj = j + dj;
          if (si < 0 || sj < 0 || si >= 64 || sj >= 64) continue;
          touches_frame |= !s8.omega2(si / 8, sj / 8);
        }
      expected += touches_frame;
    }
  CHECK(f8.mesh.num_nodes() == expected);
  CHECK(f8.mesh.total_area() == doctest::Approx(1.0 - 0.25).epsilon(1e-12));
  for (int v = 0; v < f8.mesh.num_nodes(); ++v) {
    const Point& p = f8.mesh.nodes()[v];
    const bool strictly_inside = p.x() > 0.25 + 1e-12 && p.x() < 0.75 - 1e-12 && p.y() > 0.25 + 1e-12 &&
                                 p.y() < 0.75 - 1e-12;
    CHECK_FALSE(strictly_inside);
  }
}

TEST_CASE("interface pairing") {
  const CoarseMesh m32 = build_coarse_mesh(32);
  const DomainSplit s32 = split_domain(m32, 2);
  const FineMesh f32 = build_frame_fine_mesh(s32, 1024);
  const InterfacePairing p32 = pair_interface(s32, f32, m32);
  double total = 0;
  for (const auto& e : p32.entries) total += e.length;
  CHECK(total == doctest::Approx(3.5).epsilon(1e-12));

  const CoarseMesh m = build_coarse_mesh(8);
  const DomainSplit s = split_domain(m, 2);
  const FineMesh f = build_frame_fine_mesh(s, 64);
  const InterfacePairing p = pair_interface(s, f, m);
  std::map<int, std::vector<const PairingEntry*>> by_edge;
  for (const auto& e : p.entries) by_edge[e.coarse_edge].push_back(&e);
  CHECK(by_edge.size() == s.gamma.size());

  for (const auto& [edge, entries] : by_edge) {
    const InterfaceEdge& E = s.gamma[edge];
    CHECK(entries.size() == 8u);
    const Point A = m.nodes()[E.node_a], B = m.nodes()[E.node_b];
    // the fine edges tile E: lengths sum to H and parameters chain from 0 to 1
    double len = 0;
    std::vector<std::pair<double, double>> spans;
    for (const auto* e : entries) {
      const Point a = f.mesh.nodes()[e->fine_node_a], b = f.mesh.nodes()[e->fine_node_b];
      len += e->length;
      const double ta = (a - A).dot(B - A) / (B - A).squaredNorm();
      const double tb = (b - A).dot(B - A) / (B - A).squaredNorm();
      spans.emplace_back(std::min(ta, tb), std::max(ta, tb));
      // collinear with E
      const Point d = B - A;
      CHECK(std::abs(d.x() * (a - A).y() - d.y() * (a - A).x()) < 1e-12);
    }
    CHECK(len == doctest::Approx(E.length).epsilon(1e-12));
    std::sort(spans.begin(), spans.end());
    CHECK(spans.front().first == doctest::Approx(0.0));
    CHECK(spans.back().second == doctest::Approx(1.0));
    for (size_t k = 1; k < spans.size(); ++k) CHECK(std::abs(spans[k].first - spans[k - 1].second) < 1e-12);
  }

  for (const auto& e : p.entries) {
    CHECK(e.normal.norm() == doctest::Approx(1.0).epsilon(1e-15));
    const Point toward = barycenter(m.triangle(e.coarse_element)) - barycenter(f.mesh.triangle(e.fine_element));
    CHECK(e.normal.dot(toward) > 0);
    const Point a = f.mesh.nodes()[e.fine_node_a], b = f.mesh.nodes()[e.fine_node_b];
    if (std::abs(a.y() - 0.25) < 1e-12 && std::abs(b.y() - 0.25) < 1e-12) {
      CHECK(e.normal.x() == 0.0);
      CHECK(e.normal.y() == 1.0);
    }
  }
}

TEST_CASE("every fine interface edge is paired exactly once") {
  const CoarseMesh m = build_coarse_mesh(8);
  const DomainSplit s = split_domain(m, 2);
  const FineMesh f = build_frame_fine_mesh(s, 64);
  const InterfacePairing p = pair_interface(s, f, m);
  CHECK(p.entries.size() == f.gamma_edges.size());
  std::map<std::pair<int, int>, int> seen;
  for (const auto& e : p.entries) ++seen[{std::min(e.fine_node_a, e.fine_node_b), std::max(e.fine_node_a, e.fine_node_b)}];
  for (const auto& [k, n] : seen) CHECK(n == 1);
  CHECK(seen.size() == p.entries.size());
}

TEST_CASE("oversampling patch") {
  // dilation about the barycenter: v' = v0 - (2/3)(v1 - v0) - (2/3)(v2 - v0)
  // for (0,0), (H,0), (0,H) that is (-2H/3, -2H/3)
  const CoarseMesh m = build_coarse_mesh(8);
  const DomainSplit s = split_domain(m, 2);
  const int e = m.element_at(3, 3, 0);
  const OversamplingPatch p = make_oversampling_patch(m, e, 3.0, s);
  const Triangle K = m.triangle(e);
  for (int k = 0; k < 3; ++k) {
    const Point& v = K[k];
    const Point& v1 = K[(k + 1) % 3];
    const Point& v2 = K[(k + 2) % 3];
    const Point expect = v - (2.0 / 3.0) * (v1 - v) - (2.0 / 3.0) * (v2 - v);
    CHECK((p.patch[k] - expect).norm() < 1e-15);
  }
  CHECK(signed_area(p.patch) == doctest::Approx(9 * signed_area(K)).epsilon(1e-13));
  CHECK_THROWS(make_oversampling_patch(m, e, 1.0, s));
  CHECK_THROWS(make_oversampling_patch(m, m.element_at(0, 0, 0), 3.0, s));

  // every Omega_2 element of a two-layer split: patch vertices stay in the closed square
  for (int k = 0; k < m.num_elements(); ++k) {
    if (!s.omega2(m.square_of_element(k))) continue;
    const OversamplingPatch q = make_oversampling_patch(m, k, 3.0, s);
    for (const Point& v : q.patch) {
      CHECK(v.x() >= -1e-12);
      CHECK(v.x() <= 1 + 1e-12);
      CHECK(v.y() >= -1e-12);
      CHECK(v.y() <= 1 + 1e-12);
    }
    for (const Point& v : q.base) CHECK(barycentric(q.patch, v).minCoeff() > 0);
  }
}

TEST_CASE("triangle refinement") {
  const Triangle unit{Point(0, 0), Point(1, 0), Point(0, 1)};
  const SubMesh s1 = refine_triangle(unit, 1);
  CHECK(s1.num_elements() == 1);
  CHECK(s1.num_nodes() == 3);
  const SubMesh s4 = refine_triangle(unit, 4);
  CHECK(s4.num_elements() == 16);
  CHECK(s4.num_nodes() == 15);
  CHECK(refine_triangle(unit, 2).total_area() == doctest::Approx(0.5).epsilon(1e-15));

  const Triangle skew{Point(0.1, 0.2), Point(0.7, 0.3), Point(0.4, 0.9)};
  for (int n : {3, 7, 12}) {
    const SubMesh s = refine_triangle(skew, n);
    CHECK(s.num_nodes() == (n + 1) * (n + 2) / 2);
    CHECK(s.total_area() == doctest::Approx(signed_area(skew)).epsilon(1e-12));
    int boundary = 0;
    for (int v = 0; v < s.num_nodes(); ++v) {
      const Cell c = s.lattice_of_node(v);
      CHECK(s.node_at(c.i, c.j) == v);
      const bool on = c.i == 0 || c.j == 0 || c.i + c.j == n;
      CHECK(static_cast<bool>(s.boundary_nodes()[v]) == on);
      boundary += on;
    }
    CHECK(boundary == 3 * n);
    for (int e = 0; e < s.num_elements(); ++e) {
      CHECK(signed_area(s.triangle(e)) == doctest::Approx(signed_area(skew) / (n * n)).epsilon(1e-12));
    }
  }
}

TEST_CASE("area conservation on lattice meshes") {
  for (int n : {4, 7, 16, 33}) CHECK(LatticeMesh(n).total_area() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sub-mesh nodes on the interface coincide with fine nodes") {
  const CoarseMesh m = build_coarse_mesh(8);
  const DomainSplit s = split_domain(m, 2);
  const FineMesh f = build_frame_fine_mesh(s, 64);
  int checked = 0;
  for (const auto& E : s.gamma) {
    const SubMesh sm = refine_triangle(m.triangle(E.coarse_element), 8);
    const Point A = m.nodes()[E.node_a], B = m.nodes()[E.node_b];
    for (int v = 0; v < sm.num_nodes(); ++v) {
      const Point& x = sm.nodes()[v];
      const Point d = B - A;
      const double t = (x - A).dot(d) / d.squaredNorm();
      if (t < -1e-12 || t > 1 + 1e-12 || (A + t * d - x).norm() > 1e-12) continue;
      const auto loc = f.mesh.locate(x);
      REQUIRE(loc);
      const auto& nodes = f.mesh.elements()[loc->element];
      double best = 1;
      for (int k : nodes) best = std::min(best, (f.mesh.nodes()[k] - x).lpNorm<Eigen::Infinity>());
      CHECK(best <= 1e-12);
      ++checked;
    }
  }
  CHECK(checked == static_cast<int>(s.gamma.size()) * 9);
}

TEST_CASE("mesh dump format") {
  std::ostringstream os;
  write_mesh_dump(os, refine_triangle({Point(0, 0), Point(1, 0), Point(0, 1)}, 1));
  const std::string s = os.str();
  CHECK(s.rfind("nodes:", 0) == 0);
  CHECK(s.find("elements:") != std::string::npos);
}
