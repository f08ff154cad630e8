#pragma once

#include <Eigen/Dense>

#include "ldg/mesh.hpp"

namespace ldg {

// Nodal Lagrange basis on the reference element: P_k on the unit triangle,
// Q_k on the unit square, equispaced nodes. Degree 0 uses the barycenter.
struct ReferenceBasis {
  CellKind kind = CellKind::Tri;
  int degree = 0;
  int ndof = 0;
  Eigen::MatrixX2d nodes;                 // ndof x 2
  Eigen::MatrixXi mono;                   // ndof x 2 exponents (a, b)
  Eigen::MatrixXd coeff;                  // basis j = sum_m coeff(m,j) x^a y^b

  ReferenceBasis() = default;
  ReferenceBasis(CellKind kind, int degree);

  // Tables at the given reference points, each npts x ndof.
  struct Tables {
    Eigen::MatrixXd val, dx, dy, dxx, dxy, dyy;
  };
  Tables tabulate(const Eigen::MatrixX2d& points) const;
};

int dim_Pk(int k);
int dim_Qk(int k);

}  // namespace ldg
