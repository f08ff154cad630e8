#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <utility>

#include "doctest.h"
#include "ldg/common.hpp"
#include "ldg/mesh.hpp"

using namespace ldg;

TEST_CASE("structured counts: 1x1 quad") {
  const Mesh m = Mesh::structured(CellKind::Quad, 1, 1, 0, 0, 1, 1);
  CHECK(m.num_elements() == 1);
  CHECK(m.boundary_edges.size() == 4);
  CHECK(m.interior_edges.size() == 0);
}

TEST_CASE("structured counts: 1x1 tri") {
  const Mesh m = Mesh::structured(CellKind::Tri, 1, 1, 0, 0, 1, 1);
  CHECK(m.num_elements() == 2);
  CHECK(m.interior_edges.size() == 1);
  CHECK(m.boundary_edges.size() == 4);
}

TEST_CASE("structured counts: 2x2 tri against brute-force enumeration") {
  const Mesh m = Mesh::structured(CellKind::Tri, 2, 2, 0, 0, 1, 1);
  CHECK(m.num_elements() == 8);

  // oracle: enumerate undirected vertex pairs over the element list
  std::set<std::pair<int, int>> pairs;
  std::map<std::pair<int, int>, int> count;
  for (const auto& el : m.elements)
    for (int l = 0; l < 3; ++l) {
      auto key = std::minmax(el[l], el[(l + 1) % 3]);
      pairs.insert(key);
      count[key]++;
    }
  int interior = 0, boundary = 0;
  for (const auto& [k, c] : count) (c == 2 ? interior : boundary)++;
  CHECK(interior == 8);
  CHECK(boundary == 8);
  CHECK(m.interior_edges.size() == static_cast<size_t>(interior));
  CHECK(m.boundary_edges.size() == static_cast<size_t>(boundary));
  CHECK(m.num_edges() == static_cast<int>(pairs.size()));
}

TEST_CASE("areas sum to the domain area") {
  for (CellKind kind : {CellKind::Tri, CellKind::Quad}) {
    const Mesh m = Mesh::structured(kind, 3, 5, -1, 2, 2.5, 4);
    CHECK(m.domain_area() == doctest::Approx(3.5 * 2.0).epsilon(1e-13));
  }
}

TEST_CASE("edge orientation: minus side has the smaller element index") {
  const Mesh m = Mesh::structured(CellKind::Tri, 3, 3, 0, 0, 1, 1);
  for (int ie : m.interior_edges) {
    const Edge& ed = m.edges[ie];
    CHECK(ed.elem_minus < ed.elem_plus);
    // normal is the minus-side outward normal: points away from the
    // minus element's centroid
    Eigen::Vector2d cm = Eigen::Vector2d::Zero(),
                    cp = Eigen::Vector2d::Zero();
    for (int l = 0; l < 3; ++l) {
      cm += m.vertex_of(ed.elem_minus, l) / 3.0;
      cp += m.vertex_of(ed.elem_plus, l) / 3.0;
    }
    const Eigen::Vector2d mid =
        0.5 * (m.vertices[ed.v0] + m.vertices[ed.v1]);
    CHECK(ed.normal.dot(mid - cm) > 0.0);
    CHECK(ed.normal.dot(mid - cp) < 0.0);
    CHECK(ed.normal.norm() == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("shape regularity: right triangles give ratio 1+sqrt(2)") {
  const Mesh m = Mesh::structured(CellKind::Tri, 4, 4, 0, 0, 1, 1);
  const RegularityReport rep = m.regularity_report();
  // legs a,a: h = a*sqrt(2), rho = 4*(a^2/2)/(a(2+sqrt 2)), ratio = 1+sqrt(2)
  CHECK(rep.max_ratio == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-12));
  for (int e = 0; e < m.num_elements(); ++e)
    CHECK(m.elem_diameter[e] / m.elem_incircle[e] ==
          doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-12));
  CHECK(rep.h_max == doctest::Approx(std::sqrt(2.0) / 4).epsilon(1e-13));
  CHECK(rep.min_detDF == doctest::Approx(2.0 * 0.5 / 16).epsilon(1e-13));
}

TEST_CASE("shape regularity: squares give ratio 1+sqrt(2)") {
  const Mesh m = Mesh::structured(CellKind::Quad, 3, 3, 0, 0, 1, 1);
  const RegularityReport rep = m.regularity_report();
  // side a: h = a*sqrt(2); diagonal split gives right subtriangles with
  // incircle diameter a*(2 - sqrt 2), so ratio = sqrt(2)/(2-sqrt(2)) = 1+sqrt(2)
  CHECK(rep.max_ratio == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("refinement quadruples elements, halves h, keeps regularity") {
  const Mesh m = Mesh::structured(CellKind::Tri, 2, 2, 0, 0, 1, 1);
  const Mesh r = m.refined();
  CHECK(r.num_elements() == 4 * m.num_elements());
  CHECK(r.h_max() == doctest::Approx(0.5 * m.h_max()).epsilon(1e-13));
  CHECK(r.regularity_report().max_ratio ==
        doctest::Approx(m.regularity_report().max_ratio).epsilon(1e-12));
  CHECK(r.domain_area() == doctest::Approx(1.0).epsilon(1e-13));

  const Mesh q = Mesh::structured(CellKind::Quad, 2, 2, 0, 0, 1, 1).refined();
  CHECK(q.num_elements() == 16);
  CHECK(q.domain_area() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("refinement preserves boundary labels") {
  Mesh m = Mesh::structured(CellKind::Quad, 2, 2, 0, 0, 1, 1);
  mark_dirichlet_sides(m, {"left"});
  int ndir = 0;
  for (int i : m.boundary_edges)
    if (m.edges[i].label == BoundaryLabel::Dirichlet) ndir++;
  CHECK(ndir == 2);
  const Mesh r = m.refined();
  int ndir2 = 0;
  for (int i : r.boundary_edges)
    if (r.edges[i].label == BoundaryLabel::Dirichlet) {
      ndir2++;
      CHECK(std::abs(r.vertices[r.edges[i].v0].x()) < 1e-14);
      CHECK(std::abs(r.vertices[r.edges[i].v1].x()) < 1e-14);
    }
  CHECK(ndir2 == 4);
}

TEST_CASE("save/load round trip") {
  Mesh m = Mesh::structured(CellKind::Tri, 2, 2, 0.1, -0.3, 1.7, 2.9);
  mark_dirichlet_sides(m, {"top"});
  const std::string path = "roundtrip.mesh";
  m.save(path);
  const Mesh l = Mesh::load(path);
  REQUIRE(l.num_vertices() == m.num_vertices());
  REQUIRE(l.num_elements() == m.num_elements());
  for (int i = 0; i < m.num_vertices(); ++i) {
    CHECK(l.vertices[i].x() == m.vertices[i].x());
    CHECK(l.vertices[i].y() == m.vertices[i].y());
  }
  for (int e = 0; e < m.num_elements(); ++e)
    CHECK(l.elements[e] == m.elements[e]);
  for (int i = 0; i < m.num_edges(); ++i)
    CHECK(l.edges[i].label == m.edges[i].label);
  std::remove(path.c_str());
}

TEST_CASE("load rejects bad input with line numbers") {
  {
    std::FILE* f = std::fopen("bad1.mesh", "w");
    std::fputs("ldgmesh v1 quad\nvertices 4\n0 0\n1 0\n1 1\n0 1\n"
               "elements 1\n0 1 2 9\nboundary 0\n", f);
    std::fclose(f);
    CHECK_THROWS_WITH_AS(Mesh::load("bad1.mesh"),
                         doctest::Contains("bad1.mesh:8"), Error);
    std::remove("bad1.mesh");
  }
  {
    std::FILE* f = std::fopen("bad2.mesh", "w");
    std::fputs("ldgmesh v2 quad\n", f);
    std::fclose(f);
    CHECK_THROWS_AS(Mesh::load("bad2.mesh"), Error);
    std::remove("bad2.mesh");
  }
  {
    // clockwise element
    std::FILE* f = std::fopen("bad3.mesh", "w");
    std::fputs("ldgmesh v1 tri\nvertices 3\n0 0\n1 0\n0 1\n"
               "elements 1\n0 2 1\nboundary 0\n", f);
    std::fclose(f);
    CHECK_THROWS_AS(Mesh::load("bad3.mesh"), Error);
    std::remove("bad3.mesh");
  }
}

TEST_CASE("single quad from file") {
  std::FILE* f = std::fopen("one.mesh", "w");
  std::fputs("ldgmesh v1 quad\nvertices 4\n0 0\n2 0\n2 1\n0 1\n"
             "elements 1\n0 1 2 3\nboundary 4\n0 1 free\n1 2 free\n"
             "2 3 dirichlet\n3 0 free\n", f);
  std::fclose(f);
  const Mesh m = Mesh::load("one.mesh");
  CHECK(m.num_elements() == 1);
  CHECK(m.domain_area() == doctest::Approx(2.0));
  int ndir = 0;
  for (int i : m.boundary_edges)
    if (m.edges[i].label == BoundaryLabel::Dirichlet) ndir++;
  CHECK(ndir == 1);
  std::remove("one.mesh");
}

TEST_CASE("degenerate rectangle rejected") {
  CHECK_THROWS_AS(Mesh::structured(CellKind::Tri, 2, 2, 0, 0, 0, 1), Error);
  CHECK_THROWS_AS(Mesh::structured(CellKind::Tri, 0, 2, 0, 0, 1, 1), Error);
}
