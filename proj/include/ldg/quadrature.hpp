#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ldg {

// 1D Gauss-Legendre rule on [0,1] with n points (exact for degree 2n-1).
struct GaussRule1D {
  Eigen::VectorXd points;
  Eigen::VectorXd weights;
};

GaussRule1D gauss_legendre(int n);

// Quadrature rule on the reference element: unit triangle {x,y>=0, x+y<=1}
// or unit square [0,1]^2.
struct QuadratureRule {
  Eigen::MatrixX2d points;  // nq x 2 reference coordinates
  Eigen::VectorXd weights;  // nq, sums to reference measure
  int nq() const { return static_cast<int>(weights.size()); }
};

// Triangle rule via the Duffy transform of an n x n tensor Gauss rule;
// exact for polynomials of degree 2n-2.
QuadratureRule triangle_rule(int n);

// Tensor n x n Gauss rule on the unit square; exact for degree 2n-1
// in each variable.
QuadratureRule square_rule(int n);

}  // namespace ldg
