#include "ldg/quadrature.hpp"

#include <cmath>

#include "ldg/common.hpp"

namespace ldg {

GaussRule1D gauss_legendre(int n) {
  if (n < 1) throw Error("gauss_legendre: need at least 1 point");
  Eigen::VectorXd x(n), w(n);
  // Newton on Legendre polynomials over [-1,1], then map to [0,1].
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2 * j - 1) * t * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    x[i] = 0.5 * (1.0 + t);
    w[i] = 1.0 / ((1.0 - t * t) * dp * dp);  // includes the 1/2 interval scaling
  }
  return {x, w};
}

QuadratureRule triangle_rule(int n) {
  const GaussRule1D g = gauss_legendre(n);
  QuadratureRule r;
  r.points.resize(n * n, 2);
  r.weights.resize(n * n);
  int q = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j, ++q) {
      const double xi = g.points[i], eta = g.points[j];
      r.points(q, 0) = xi;
      r.points(q, 1) = eta * (1.0 - xi);
      r.weights[q] = g.weights[i] * g.weights[j] * (1.0 - xi);
    }
  return r;
}

QuadratureRule square_rule(int n) {
  const GaussRule1D g = gauss_legendre(n);
  QuadratureRule r;
  r.points.resize(n * n, 2);
  r.weights.resize(n * n);
  int q = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j, ++q) {
      r.points(q, 0) = g.points[i];
      r.points(q, 1) = g.points[j];
      r.weights[q] = g.weights[i] * g.weights[j];
    }
  return r;
}

}  // namespace ldg
