#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

namespace ldg {

enum class CellKind { Tri, Quad };
enum class BoundaryLabel { Free, Dirichlet };

// One mesh edge. Endpoints (v0,v1) are stored in the counterclockwise order
// of the minus-side element, so the minus-side outward normal is the rotation
// of (v1-v0) by -90 degrees. The minus side is the adjacent element with the
// smaller global index; the normal points from minus into plus.
struct Edge {
  int v0 = -1, v1 = -1;
  int elem_minus = -1, elem_plus = -1;   // elem_plus = -1 on boundary
  int local_minus = -1, local_plus = -1; // local edge index within each element
  bool flip_plus = false;                // plus-side local edge runs v1 -> v0
  BoundaryLabel label = BoundaryLabel::Free;  // meaningful on boundary edges
  double length = 0.0;
  Eigen::Vector2d normal = Eigen::Vector2d::Zero();

  bool is_boundary() const { return elem_plus < 0; }
};

struct RegularityReport {
  double max_ratio = 0.0;  // max over elements of h_K / rho_K
  double min_detDF = 0.0;  // min over elements/quad points of |det DF_K|
  double h_max = 0.0;
  double h_min = 0.0;
};

// Conforming mesh of triangles or convex quadrilaterals, immutable after
// construction. Elements are counterclockwise; connectivity is built once.
struct Mesh {
  CellKind kind = CellKind::Tri;
  std::vector<Eigen::Vector2d> vertices;
  std::vector<std::array<int, 4>> elements;  // 4th entry -1 for triangles
  std::vector<Edge> edges;
  std::vector<int> interior_edges;   // indices into edges
  std::vector<int> boundary_edges;   // indices into edges
  std::vector<std::array<int, 4>> elem_edges;  // edge index per local edge
  std::vector<double> elem_diameter;           // h_K
  std::vector<double> elem_incircle;           // rho_K

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  int verts_per_elem() const { return kind == CellKind::Tri ? 3 : 4; }

  Eigen::Vector2d vertex_of(int elem, int local) const {
    return vertices[elements[elem][local]];
  }

  double h_max() const;
  double h_min() const;
  double element_area(int elem) const;
  double domain_area() const;

  // Builds connectivity, orientations, diameters; validates all invariants.
  // Throws Error on nonconforming or degenerate input.
  void finalize();

  RegularityReport regularity_report() const;

  Mesh refined() const;  // uniform refinement into 4 children per element

  static Mesh structured(CellKind kind, int nx, int ny, double x0, double y0,
                         double x1, double y1);
  static Mesh load(const std::string& path);
  void save(const std::string& path) const;
};

// Relabels boundary edges of a structured rectangle mesh: edges lying on the
// listed sides ("left","right","bottom","top") of the bounding box become
// Dirichlet. Used by configs; file meshes carry their own labels.
void mark_dirichlet_sides(Mesh& mesh, const std::vector<std::string>& sides);

}  // namespace ldg
