#include "ldg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include "ldg/common.hpp"

namespace ldg {

namespace {

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

double tri_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                const Eigen::Vector2d& c) {
  return 0.5 * cross2(b - a, c - a);
}

// incircle diameter of a triangle: 2 * area / semiperimeter * ... rho = 2r
double tri_incircle_diam(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                         const Eigen::Vector2d& c) {
  const double per = (b - a).norm() + (c - b).norm() + (a - c).norm();
  return 4.0 * std::abs(tri_area(a, b, c)) / per;
}

}  // namespace

double Mesh::element_area(int e) const {
  const auto& el = elements[e];
  if (kind == CellKind::Tri)
    return tri_area(vertices[el[0]], vertices[el[1]], vertices[el[2]]);
  return tri_area(vertices[el[0]], vertices[el[1]], vertices[el[2]]) +
         tri_area(vertices[el[0]], vertices[el[2]], vertices[el[3]]);
}

double Mesh::domain_area() const {
  double a = 0.0;
  for (int e = 0; e < num_elements(); ++e) a += element_area(e);
  return a;
}

double Mesh::h_max() const {
  double h = 0.0;
  for (double d : elem_diameter) h = std::max(h, d);
  return h;
}

double Mesh::h_min() const {
  double h = elem_diameter.empty() ? 0.0 : elem_diameter[0];
  for (double d : elem_diameter) h = std::min(h, d);
  return h;
}

void Mesh::finalize() {
  const int nv = num_vertices(), ne = num_elements(), vpe = verts_per_elem();
  if (ne == 0) throw Error("mesh: no elements");
  for (int e = 0; e < ne; ++e) {
    for (int l = 0; l < vpe; ++l) {
      const int v = elements[e][l];
      if (v < 0 || v >= nv)
        throw Error("mesh: element " + std::to_string(e) +
                    " references vertex " + std::to_string(v) +
                    " out of range");
    }
    if (kind == CellKind::Tri && elements[e][3] != -1)
      throw Error("mesh: triangle element " + std::to_string(e) +
                  " has a 4th vertex");
  }

  // orientation and non-degeneracy
  for (int e = 0; e < ne; ++e) {
    if (kind == CellKind::Tri) {
      if (tri_area(vertex_of(e, 0), vertex_of(e, 1), vertex_of(e, 2)) <= 0.0)
        throw Error("mesh: element " + std::to_string(e) +
                    " degenerate or not counterclockwise");
    } else {
      // det DF of a bi-affine map is affine; positivity at the 4 corners
      // gives convexity + orientation
      for (int l = 0; l < 4; ++l) {
        const Eigen::Vector2d p = vertex_of(e, l);
        const Eigen::Vector2d q = vertex_of(e, (l + 1) % 4);
        const Eigen::Vector2d r = vertex_of(e, (l + 3) % 4);
        if (cross2(q - p, r - p) <= 0.0)
          throw Error("mesh: quad element " + std::to_string(e) +
                      " degenerate, nonconvex or not counterclockwise");
      }
    }
  }

  edges.clear();
  interior_edges.clear();
  boundary_edges.clear();
  elem_edges.assign(ne, {-1, -1, -1, -1});

  std::map<std::pair<int, int>, int> edge_of;
  for (int e = 0; e < ne; ++e) {
    for (int l = 0; l < vpe; ++l) {
      const int a = elements[e][l];
      const int b = elements[e][(l + 1) % vpe];
      const auto key = std::minmax(a, b);
      auto it = edge_of.find(key);
      if (it == edge_of.end()) {
        Edge ed;
        ed.v0 = a;
        ed.v1 = b;
        ed.elem_minus = e;
        ed.local_minus = l;
        edge_of.emplace(key, num_edges());
        elem_edges[e][l] = num_edges();
        edges.push_back(ed);
      } else {
        Edge& ed = edges[it->second];
        if (ed.elem_plus >= 0)
          throw Error("mesh: edge (" + std::to_string(key.first) + "," +
                      std::to_string(key.second) +
                      ") shared by more than 2 elements");
        ed.elem_plus = e;
        ed.local_plus = l;
        ed.flip_plus = (a == ed.v1);
        if (!ed.flip_plus)
          throw Error("mesh: inconsistent element orientation across edge (" +
                      std::to_string(key.first) + "," +
                      std::to_string(key.second) + ")");
        elem_edges[e][l] = it->second;
      }
    }
  }

  for (int i = 0; i < num_edges(); ++i) {
    Edge& ed = edges[i];
    const Eigen::Vector2d d = vertices[ed.v1] - vertices[ed.v0];
    ed.length = d.norm();
    if (ed.length <= 0.0) throw Error("mesh: zero-length edge");
    ed.normal = Eigen::Vector2d(d.y(), -d.x()) / ed.length;
    if (ed.is_boundary())
      boundary_edges.push_back(i);
    else
      interior_edges.push_back(i);
  }

  if (2 * static_cast<int>(interior_edges.size()) +
          static_cast<int>(boundary_edges.size()) !=
      ne * vpe)
    throw Error("mesh: edge count mismatch");

  elem_diameter.assign(ne, 0.0);
  elem_incircle.assign(ne, 0.0);
  for (int e = 0; e < ne; ++e) {
    double diam = 0.0;
    for (int i = 0; i < vpe; ++i)
      for (int j = i + 1; j < vpe; ++j)
        diam = std::max(diam, (vertex_of(e, i) - vertex_of(e, j)).norm());
    elem_diameter[e] = diam;
    if (kind == CellKind::Tri) {
      elem_incircle[e] =
          tri_incircle_diam(vertex_of(e, 0), vertex_of(e, 1), vertex_of(e, 2));
    } else {
      const Eigen::Vector2d p0 = vertex_of(e, 0), p1 = vertex_of(e, 1),
                            p2 = vertex_of(e, 2), p3 = vertex_of(e, 3);
      double rho = tri_incircle_diam(p0, p1, p2);
      rho = std::min(rho, tri_incircle_diam(p0, p2, p3));
      rho = std::min(rho, tri_incircle_diam(p0, p1, p3));
      rho = std::min(rho, tri_incircle_diam(p1, p2, p3));
      elem_incircle[e] = rho;
    }
  }
}

RegularityReport Mesh::regularity_report() const {
  RegularityReport rep;
  rep.h_max = h_max();
  rep.h_min = h_min();
  double min_det = std::numeric_limits<double>::max();
  for (int e = 0; e < num_elements(); ++e) {
    rep.max_ratio = std::max(rep.max_ratio, elem_diameter[e] / elem_incircle[e]);
    if (kind == CellKind::Tri) {
      min_det = std::min(min_det, 2.0 * element_area(e));
    } else {
      // det DF is affine on the reference square: extremes at corners
      for (int l = 0; l < 4; ++l) {
        const Eigen::Vector2d p = vertex_of(e, l);
        const Eigen::Vector2d q = vertex_of(e, (l + 1) % 4);
        const Eigen::Vector2d r = vertex_of(e, (l + 3) % 4);
        min_det = std::min(min_det, cross2(q - p, r - p));
      }
    }
  }
  rep.min_detDF = min_det;
  return rep;
}

Mesh Mesh::structured(CellKind kind, int nx, int ny, double x0, double y0,
                      double x1, double y1) {
  if (nx < 1 || ny < 1) throw Error("structured mesh: nx, ny must be >= 1");
  if (!(x1 > x0) || !(y1 > y0))
    throw Error("structured mesh: degenerate rectangle");
  Mesh m;
  m.kind = kind;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.vertices.emplace_back(x0 + (x1 - x0) * i / nx,
                              y0 + (y1 - y0) * j / ny);
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1),
                d = vid(i, j + 1);
      if (kind == CellKind::Quad) {
        m.elements.push_back({a, b, c, d});
      } else {
        // split along the lower-left to upper-right diagonal
        m.elements.push_back({a, b, c, -1});
        m.elements.push_back({a, c, d, -1});
      }
    }
  m.finalize();
  return m;
}

Mesh Mesh::refined() const {
  Mesh out;
  out.kind = kind;
  out.vertices = vertices;
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int id = static_cast<int>(out.vertices.size());
    out.vertices.push_back(0.5 * (vertices[a] + vertices[b]));
    midpoint.emplace(key, id);
    return id;
  };
  for (int e = 0; e < num_elements(); ++e) {
    const auto& el = elements[e];
    if (kind == CellKind::Tri) {
      const int a = el[0], b = el[1], c = el[2];
      const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
      out.elements.push_back({a, ab, ca, -1});
      out.elements.push_back({ab, b, bc, -1});
      out.elements.push_back({ca, bc, c, -1});
      out.elements.push_back({ab, bc, ca, -1});
    } else {
      const int a = el[0], b = el[1], c = el[2], d = el[3];
      const int ab = mid(a, b), bc = mid(b, c), cd = mid(c, d), da = mid(d, a);
      const int ctr = static_cast<int>(out.vertices.size());
      out.vertices.push_back(0.25 * (vertices[a] + vertices[b] + vertices[c] +
                                     vertices[d]));
      out.elements.push_back({a, ab, ctr, da});
      out.elements.push_back({ab, b, bc, ctr});
      out.elements.push_back({ctr, bc, c, cd});
      out.elements.push_back({da, ctr, cd, d});
    }
  }
  out.finalize();

  // children of a boundary edge inherit its label; a child boundary edge has
  // exactly one endpoint that is the parent edge's midpoint
  std::map<std::pair<int, int>, BoundaryLabel> parent_label;
  for (int i : boundary_edges) {
    const Edge& ed = edges[i];
    parent_label.emplace(std::minmax(ed.v0, ed.v1), ed.label);
  }
  std::map<int, std::pair<int, int>> midpoint_parent;
  for (const auto& [key, id] : midpoint) midpoint_parent.emplace(id, key);
  for (int i : out.boundary_edges) {
    Edge& ed = out.edges[i];
    const int nold = num_vertices();
    const int m = ed.v0 >= nold ? ed.v0 : ed.v1;
    const int w = ed.v0 >= nold ? ed.v1 : ed.v0;
    auto mp = midpoint_parent.find(m);
    if (mp == midpoint_parent.end()) throw Error("refine: lost boundary edge");
    auto pl = parent_label.find(mp->second);
    if (pl == parent_label.end() ||
        (w != mp->second.first && w != mp->second.second))
      throw Error("refine: boundary edge does not match a parent edge");
    ed.label = pl->second;
  }
  return out;
}

void Mesh::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << "ldgmesh v1 " << (kind == CellKind::Tri ? "tri" : "quad") << "\n";
  f << "vertices " << num_vertices() << "\n";
  char buf[80];
  for (const auto& v : vertices) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v.x(), v.y());
    f << buf;
  }
  f << "elements " << num_elements() << "\n";
  for (const auto& el : elements) {
    f << el[0] << " " << el[1] << " " << el[2];
    if (kind == CellKind::Quad) f << " " << el[3];
    f << "\n";
  }
  f << "boundary " << boundary_edges.size() << "\n";
  for (int i : boundary_edges) {
    const Edge& ed = edges[i];
    f << ed.v0 << " " << ed.v1 << " "
      << (ed.label == BoundaryLabel::Free ? "free" : "dirichlet") << "\n";
  }
  if (!f) throw Error("write failed for " + path);
}

Mesh Mesh::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> std::string {
    while (std::getline(f, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return line;
    }
    throw Error(path + ": unexpected end of file after line " +
                std::to_string(lineno));
  };
  auto fail = [&](const std::string& what) -> Error {
    return Error(path + ":" + std::to_string(lineno) + ": " + what);
  };

  Mesh m;
  {
    std::istringstream ss(next_line());
    std::string magic, ver, kindstr;
    ss >> magic >> ver >> kindstr;
    if (magic != "ldgmesh" || ver != "v1") throw fail("expected 'ldgmesh v1'");
    if (kindstr == "tri")
      m.kind = CellKind::Tri;
    else if (kindstr == "quad")
      m.kind = CellKind::Quad;
    else
      throw fail("unknown element kind '" + kindstr + "'");
  }
  int nv = 0;
  {
    std::istringstream ss(next_line());
    std::string kw;
    ss >> kw >> nv;
    if (kw != "vertices" || nv < 3) throw fail("expected 'vertices N'");
  }
  for (int i = 0; i < nv; ++i) {
    std::istringstream ss(next_line());
    double x, y;
    if (!(ss >> x >> y)) throw fail("bad vertex line");
    m.vertices.emplace_back(x, y);
  }
  int nel = 0;
  {
    std::istringstream ss(next_line());
    std::string kw;
    ss >> kw >> nel;
    if (kw != "elements" || nel < 1) throw fail("expected 'elements M'");
  }
  const int vpe = m.verts_per_elem();
  for (int i = 0; i < nel; ++i) {
    std::istringstream ss(next_line());
    std::array<int, 4> el = {-1, -1, -1, -1};
    for (int l = 0; l < vpe; ++l)
      if (!(ss >> el[l])) throw fail("bad element line");
    for (int l = 0; l < vpe; ++l)
      if (el[l] < 0 || el[l] >= nv)
        throw fail("vertex index " + std::to_string(el[l]) + " out of range");
    m.elements.push_back(el);
  }
  int nb = 0;
  {
    std::istringstream ss(next_line());
    std::string kw;
    ss >> kw >> nb;
    if (kw != "boundary" || nb < 0) throw fail("expected 'boundary B'");
  }
  std::vector<std::tuple<int, int, BoundaryLabel, int>> labels;
  for (int i = 0; i < nb; ++i) {
    std::istringstream ss(next_line());
    int a, b;
    std::string lab;
    if (!(ss >> a >> b >> lab)) throw fail("bad boundary line");
    if (a < 0 || a >= nv || b < 0 || b >= nv)
      throw fail("boundary vertex index out of range");
    if (lab != "free" && lab != "dirichlet")
      throw fail("unknown boundary label '" + lab + "'");
    labels.emplace_back(a, b,
                        lab == "free" ? BoundaryLabel::Free
                                      : BoundaryLabel::Dirichlet,
                        lineno);
  }

  try {
    m.finalize();
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }

  std::map<std::pair<int, int>, int> bedge;
  for (int i : m.boundary_edges)
    bedge.emplace(std::minmax(m.edges[i].v0, m.edges[i].v1), i);
  for (const auto& [a, b, lab, ln] : labels) {
    auto it = bedge.find(std::minmax(a, b));
    if (it == bedge.end())
      throw Error(path + ":" + std::to_string(ln) + ": (" + std::to_string(a) +
                  "," + std::to_string(b) + ") is not a boundary edge");
    m.edges[it->second].label = lab;
  }
  return m;
}

void mark_dirichlet_sides(Mesh& mesh, const std::vector<std::string>& sides) {
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  for (const auto& v : mesh.vertices) {
    x0 = std::min(x0, v.x());
    y0 = std::min(y0, v.y());
    x1 = std::max(x1, v.x());
    y1 = std::max(y1, v.y());
  }
  const double tol = 1e-12 * std::max(x1 - x0, y1 - y0);
  for (const std::string& side : sides) {
    bool any = false;
    for (int i : mesh.boundary_edges) {
      Edge& ed = mesh.edges[i];
      const Eigen::Vector2d a = mesh.vertices[ed.v0], b = mesh.vertices[ed.v1];
      bool on = false;
      if (side == "left")
        on = std::abs(a.x() - x0) < tol && std::abs(b.x() - x0) < tol;
      else if (side == "right")
        on = std::abs(a.x() - x1) < tol && std::abs(b.x() - x1) < tol;
      else if (side == "bottom")
        on = std::abs(a.y() - y0) < tol && std::abs(b.y() - y0) < tol;
      else if (side == "top")
        on = std::abs(a.y() - y1) < tol && std::abs(b.y() - y1) < tol;
      else if (side == "all")
        on = true;
      else if (side == "none")
        on = false;
      else
        throw Error("unknown side '" + side + "'");
      if (on) {
        ed.label = BoundaryLabel::Dirichlet;
        any = true;
      }
    }
    if (!any && side != "none")
      throw Error("no boundary edges found on side '" + side + "'");
  }
}

}  // namespace ldg
