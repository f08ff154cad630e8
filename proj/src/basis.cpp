#include "ldg/basis.hpp"

#include <cmath>

#include "ldg/common.hpp"

namespace ldg {

int dim_Pk(int k) { return (k + 1) * (k + 2) / 2; }
int dim_Qk(int k) { return (k + 1) * (k + 1); }

namespace {

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

// value of d^(dx,dy) [ x^a y^b ] at (x,y)
double mono_deriv(int a, int b, int dx, int dy, double x, double y) {
  if (a < dx || b < dy) return 0.0;
  double c = 1.0;
  for (int i = 0; i < dx; ++i) c *= (a - i);
  for (int i = 0; i < dy; ++i) c *= (b - i);
  return c * ipow(x, a - dx) * ipow(y, b - dy);
}

}  // namespace

ReferenceBasis::ReferenceBasis(CellKind k, int deg) : kind(k), degree(deg) {
  if (deg < 0) throw Error("basis: negative degree");
  ndof = (kind == CellKind::Tri) ? dim_Pk(deg) : dim_Qk(deg);
  nodes.resize(ndof, 2);
  mono.resize(ndof, 2);
  int n = 0;
  if (kind == CellKind::Tri) {
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; b + a <= deg; ++b, ++n) {
        mono(n, 0) = a;
        mono(n, 1) = b;
        if (deg == 0) {
          nodes(n, 0) = 1.0 / 3.0;
          nodes(n, 1) = 1.0 / 3.0;
        } else {
          nodes(n, 0) = static_cast<double>(a) / deg;
          nodes(n, 1) = static_cast<double>(b) / deg;
        }
      }
  } else {
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; b <= deg; ++b, ++n) {
        mono(n, 0) = a;
        mono(n, 1) = b;
        if (deg == 0) {
          nodes(n, 0) = 0.5;
          nodes(n, 1) = 0.5;
        } else {
          nodes(n, 0) = static_cast<double>(a) / deg;
          nodes(n, 1) = static_cast<double>(b) / deg;
        }
      }
  }
  Eigen::MatrixXd V(ndof, ndof);
  for (int i = 0; i < ndof; ++i)
    for (int m = 0; m < ndof; ++m)
      V(i, m) = mono_deriv(mono(m, 0), mono(m, 1), 0, 0, nodes(i, 0), nodes(i, 1));
  coeff = V.partialPivLu().inverse();
}

ReferenceBasis::Tables ReferenceBasis::tabulate(
    const Eigen::MatrixX2d& points) const {
  const int np = static_cast<int>(points.rows());
  Eigen::MatrixXd mv(np, ndof), mdx(np, ndof), mdy(np, ndof), mdxx(np, ndof),
      mdxy(np, ndof), mdyy(np, ndof);
  for (int p = 0; p < np; ++p)
    for (int m = 0; m < ndof; ++m) {
      const int a = mono(m, 0), b = mono(m, 1);
      const double x = points(p, 0), y = points(p, 1);
      mv(p, m) = mono_deriv(a, b, 0, 0, x, y);
      mdx(p, m) = mono_deriv(a, b, 1, 0, x, y);
      mdy(p, m) = mono_deriv(a, b, 0, 1, x, y);
      mdxx(p, m) = mono_deriv(a, b, 2, 0, x, y);
      mdxy(p, m) = mono_deriv(a, b, 1, 1, x, y);
      mdyy(p, m) = mono_deriv(a, b, 0, 2, x, y);
    }
  Tables t;
  t.val = mv * coeff;
  t.dx = mdx * coeff;
  t.dy = mdy * coeff;
  t.dxx = mdxx * coeff;
  t.dxy = mdxy * coeff;
  t.dyy = mdyy * coeff;
  return t;
}

}  // namespace ldg
