#pragma once

#include <memory>
#include <vector>

#include "ldg/inner.hpp"
#include "ldg/space.hpp"

namespace ldg {

// Local lifting operators r_e, b_e and the reconstructed Hessian
//   H_h(v) = D2_h v - R_h([grad v]) + B_h([v]).
// Lifted tensors live in broken tensor spaces of degrees l1 (R_h) and l2
// (B_h) over the same mesh; both auxiliary spaces share the host quadrature
// points so tensor values line up with host integration. Per edge and side,
// a core matrix maps data at the edge quadrature points to the adjacent
// element's coefficients through that element's mass factorization:
//   r core      = s * M^-1 Psi^T W        (s = 1/2 interior, 1 boundary)
//   b core (j)  = s * M^-1 (d_j Psi)^T W
// so that r_e(phi)_(i,j) = n_j * rcore * phi_i and
//         b_e(phi)_(i,j) = n_i * bcore_j * phi.
struct LiftingAssembly {
  const DGSpace* host = nullptr;
  Skeleton skel = Skeleton::Interior;
  int l1 = 0, l2 = 0;

  std::unique_ptr<DGSpace> aux1_store, aux2_store;
  const DGSpace* aux1 = nullptr;  // degree l1 tensor component space
  const DGSpace* aux2 = nullptr;  // degree l2 tensor component space

  struct EdgeCore {
    bool active = false;
    Eigen::MatrixXd r_m, r_p;        // ndof1 x nqe
    Eigen::MatrixXd b_m[2], b_p[2];  // ndof2 x nqe
  };
  std::vector<EdgeCore> cores;

  LiftingAssembly() = default;
  LiftingAssembly(const DGSpace& space, int l1_, int l2_,
                  Skeleton skel_ = Skeleton::Interior);

  bool edge_active(int e) const { return cores[e].active; }
};

// H_h values per element at the host quadrature points. Column layout:
// comp*4 + 2*i + j for tensor entry (i,j) of the field component comp.
struct DiscreteHessianField {
  const DGSpace* space = nullptr;  // host space (quadrature layout)
  int comps = 1;
  std::vector<Eigen::MatrixXd> vals;  // per element: npq x (4*comps)
};

double l2_norm(const DiscreteHessianField& h);

// Single-edge liftings of explicit edge data at the edge quadrature points;
// support is exactly the union of the adjacent elements. phi is nqe x 2 for
// r_e (a vector datum) and length nqe for b_e (a scalar datum). The result
// has 4 components: 2*i + j.
DGField lift_r_edge(const LiftingAssembly& a, int edge,
                    const Eigen::MatrixXd& phi);
DGField lift_b_edge(const LiftingAssembly& a, int edge,
                    const Eigen::VectorXd& phi);

// Global liftings of the gradient jump / value jump of a host field, taken
// over the assembly's skeleton (boundary jumps use the plain trace; Dirichlet
// data enters through hessian_data_offset). Result components: comp*4+2*i+j.
DGField lift_R(const LiftingAssembly& a, const DGField& v);
DGField lift_B(const LiftingAssembly& a, const DGField& v);

DiscreteHessianField discrete_hessian(const LiftingAssembly& a,
                                      const DGField& v);

// Affine offset of H_h for inhomogeneous Dirichlet data: + R_h over Dirichlet
// edges of the data gradient traces minus B_h of the data value traces.
// value(x,y) returns comps entries; grad(x,y) returns 2*comps entries laid
// out comp*2 + deriv. Zero field when the skeleton has no Dirichlet edges.
DiscreteHessianField hessian_data_offset(const LiftingAssembly& a, int comps,
                                         const VectorClosure& value,
                                         const VectorClosure& grad);

// Dense per-element action of H_h on one scalar component: rows q*4+2*i+j,
// columns grouped per patch element (the element itself first, then each
// neighbor across an active edge), nloc columns each.
struct ElementHessOp {
  std::vector<int> patch;
  Eigen::MatrixXd op;
};
std::vector<ElementHessOp> hessian_ops(const LiftingAssembly& a);

// Min/max over random scalar fields of
//   (||H_h(v)||^2 + g1 ||h^-1/2 [grad v]||^2 + g0 ||h^-3/2 [v]||^2) / |v|^2_H2h
// with jumps over the assembly's skeleton.
struct EquivalenceReport {
  double c_lower = 0.0;
  double c_upper = 0.0;
};
EquivalenceReport seminorm_equivalence_check(const LiftingAssembly& a,
                                             double gamma0, double gamma1,
                                             int samples,
                                             std::uint64_t seed = 0);

}  // namespace ldg
