#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "ldg/basis.hpp"
#include "ldg/mesh.hpp"
#include "ldg/quadrature.hpp"

namespace ldg {

// Per-element geometry and physical basis tables at the element quadrature
// points. Tables are npq x ndof.
struct ElemGeom {
  Eigen::MatrixX2d qpts;   // physical quadrature points
  Eigen::VectorXd qw;      // reference weight * det DF
  std::vector<Eigen::Matrix2d> invJt;  // DF^{-T} at each point
  Eigen::Vector2d d2f = Eigen::Vector2d::Zero();  // mixed d2F (bi-affine quads)
  Eigen::MatrixXd val, dx, dy, hxx, hxy, hyy;
};

// Basis traces of both adjacent elements at the edge quadrature points.
// Points follow the edge's own parameterization (v0 -> v1); the plus-side
// tables are empty on boundary edges. Gradients are physical.
struct EdgeTrace {
  Eigen::MatrixX2d qpts;
  Eigen::VectorXd qw;  // 1D Gauss weight * edge length
  Eigen::MatrixXd val_m, dx_m, dy_m;
  Eigen::MatrixXd val_p, dx_p, dy_p;
};

// Broken polynomial space on a mesh with cached geometry, basis tables,
// and per-element mass Cholesky factors. Immutable after construction.
struct DGSpace {
  const Mesh* mesh = nullptr;
  int degree = 0;
  int elem_pts_n = 0, edge_pts_n = 0;  // per-direction point counts in use
  ReferenceBasis ref;
  QuadratureRule qrule;   // reference element rule
  GaussRule1D erule;      // edge rule on [0,1]
  std::vector<ElemGeom> geom;
  std::vector<EdgeTrace> trace;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> mass_llt;

  DGSpace() = default;
  // Quadrature defaults: element rule exact to degree 2k+2, edge rule exact
  // to degree 2k+1; override via explicit point counts (per direction).
  DGSpace(const Mesh& mesh, int degree, int elem_pts = -1, int edge_pts = -1);

  int nloc() const { return ref.ndof; }
  int num_dofs() const { return mesh->num_elements() * ref.ndof; }
  int npq() const { return qrule.nq(); }
  int neq() const { return static_cast<int>(erule.points.size()); }

  // Reference coordinates, within the given side's element, of the edge
  // quadrature points of edge `e`.
  Eigen::MatrixX2d edge_ref_points(int e, bool minus_side) const;

  // Physical geometry data at arbitrary reference points of one element.
  void geometry_at(int elem, const Eigen::MatrixX2d& ref_pts,
                   Eigen::MatrixX2d* phys, std::vector<Eigen::Matrix2d>* invJt,
                   Eigen::VectorXd* det) const;
};

struct DGField {
  const DGSpace* space = nullptr;
  int comps = 1;
  Eigen::VectorXd coeffs;

  DGField() = default;
  DGField(const DGSpace& s, int comps_)
      : space(&s), comps(comps_),
        coeffs(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(comps_) *
                                     s.num_dofs())) {}

  // component-major layout; per-element contiguous blocks inside a component
  double coef(int comp, int elem, int i) const {
    return coeffs[comp * space->num_dofs() + elem * space->nloc() + i];
  }
  double& coef(int comp, int elem, int i) {
    return coeffs[comp * space->num_dofs() + elem * space->nloc() + i];
  }
  Eigen::VectorXd elem_coeffs(int comp, int elem) const {
    return coeffs.segment(comp * space->num_dofs() + elem * space->nloc(),
                          space->nloc());
  }
  Eigen::Ref<const Eigen::VectorXd> component(int comp) const {
    return coeffs.segment(static_cast<Eigen::Index>(comp) * space->num_dofs(),
                          space->num_dofs());
  }
};

struct Evaluation {
  Eigen::MatrixXd value;               // npts x comps
  std::vector<Eigen::MatrixXd> grad;   // per comp: npts x 2
  std::vector<Eigen::MatrixXd> hess;   // per comp: npts x 3 (xx, xy, yy)
};

// Values and physical derivatives at reference points of one element.
Evaluation evaluate(const DGField& f, int elem,
                    const Eigen::MatrixX2d& ref_points);

using ScalarClosure = std::function<double(double, double)>;
using VectorClosure = std::function<Eigen::VectorXd(double, double)>;

// Nodal Lagrange interpolant.
DGField interpolate(const DGSpace& space, int comps, const VectorClosure& v);
DGField interpolate_scalar(const DGSpace& space, const ScalarClosure& v);

// Quadrature functionals.
Eigen::VectorXd integral(const DGField& f);          // componentwise
double l2_norm(const DGField& f);
double l4_norm(const DGField& f);
double broken_grad_norm(const DGField& f);           // || grad_h f ||_L2
double l2_distance(const DGField& f, int comps, const VectorClosure& exact);

// Jump seminorms over the interior skeleton: || h^pow [f] || and
// || h^pow [grad f] || with the edge-length weight h_e^(2*pow) inside.
double jump_value_norm(const DGField& f, double pow);
double jump_grad_norm(const DGField& f, double pow);

// iid standard normal nodal coefficients, scaled.
DGField random_field(const DGSpace& space, int comps, class Rng& rng,
                     double amplitude = 1.0);

// Traces of a field at the quadrature points of one edge; plus-side blocks
// are empty on boundary edges. Matrices are nqe x comps (gradients nqe x 2
// per component, flattened as [dx_c dy_c] column pairs).
struct EdgeValues {
  Eigen::MatrixXd val_m, val_p;
  Eigen::MatrixXd grad_m, grad_p;  // columns 2c, 2c+1 = (d/dx, d/dy) of comp c
};
EdgeValues edge_values(const DGField& f, int edge);

}  // namespace ldg
