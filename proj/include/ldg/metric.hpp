#pragma once

#include <Eigen/Dense>
#include <functional>

#include "ldg/space.hpp"

namespace ldg {

using Matrix32d = Eigen::Matrix<double, 3, 2>;
using MetricClosure = std::function<Eigen::Matrix2d(double, double)>;

// Closed-form square root of a symmetric positive definite 2x2 matrix:
// sqrt(A) = (A + sqrt(det A) I) / sqrt(tr A + 2 sqrt(det A)).
Eigen::Matrix2d spd_sqrt(const Eigen::Matrix2d& a);

// Inverse of the root; verifies (result^2) a = I to 1e-12 and throws if the
// input was not usable as an SPD matrix.
Eigen::Matrix2d spd_inv_sqrt(const Eigen::Matrix2d& a);

// Prescribed target metric with an optional analytic immersion for
// diagnostics. immersion_hess columns hold the second derivative vectors
// d11 y, d12 y, d22 y.
struct MetricField {
  MetricClosure g;
  std::function<Eigen::Vector3d(double, double)> immersion;
  std::function<Matrix32d(double, double)> immersion_grad;
  std::function<Eigen::Matrix3d(double, double)> immersion_hess;

  Eigen::Matrix2d at(double x, double y) const { return g(x, y); }
  Eigen::Matrix2d inv_sqrt(double x, double y) const {
    return spd_inv_sqrt(g(x, y));
  }
  bool has_immersion() const { return static_cast<bool>(immersion); }
};

MetricField metric_identity();              // flat-plane reference immersion
MetricField metric_cylinder();              // g = I2, cylinder immersion
MetricField metric_stretched(double beta);  // diag(1 + beta x2^2, 1)
MetricField metric_custom(MetricClosure g);

// Throws when g fails to be SPD at some quadrature point, naming the point.
void check_metric_spd(const MetricField& g, const DGSpace& s);

// integral of the Frobenius norm |g(x)| over the mesh
double metric_l1_norm(const MetricField& g, const DGSpace& s);

}  // namespace ldg
