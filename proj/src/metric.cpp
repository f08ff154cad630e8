#include "ldg/metric.hpp"

#include <cmath>
#include <sstream>

#include "ldg/common.hpp"

namespace ldg {

Eigen::Matrix2d spd_sqrt(const Eigen::Matrix2d& a) {
  const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  const double tr = a(0, 0) + a(1, 1);
  if (!(det > 0.0) || !(tr > 0.0)) {
    std::ostringstream os;
    os << "spd_sqrt: matrix is not SPD (trace " << tr << ", det " << det
       << ")";
    throw Error(os.str());
  }
  const double s = std::sqrt(det);
  const double t = std::sqrt(tr + 2.0 * s);
  Eigen::Matrix2d r = a;
  r(0, 0) += s;
  r(1, 1) += s;
  return r / t;
}

Eigen::Matrix2d spd_inv_sqrt(const Eigen::Matrix2d& a) {
  const Eigen::Matrix2d r = spd_sqrt(a);
  const double det = r(0, 0) * r(1, 1) - r(0, 1) * r(1, 0);
  Eigen::Matrix2d inv;
  inv << r(1, 1), -r(0, 1), -r(1, 0), r(0, 0);
  inv /= det;
  const double dev = (inv * inv * a - Eigen::Matrix2d::Identity()).norm();
  if (!(dev <= 1e-12)) {
    std::ostringstream os;
    os << "spd_inv_sqrt: verification failed, |(g^-1/2)^2 g - I| = " << dev;
    throw Error(os.str());
  }
  return inv;
}

MetricField metric_identity() {
  MetricField m;
  m.g = [](double, double) { return Eigen::Matrix2d::Identity().eval(); };
  m.immersion = [](double x, double y) { return Eigen::Vector3d(x, y, 0.0); };
  m.immersion_grad = [](double, double) {
    Matrix32d d;
    d << 1, 0, 0, 1, 0, 0;
    return d;
  };
  m.immersion_hess = [](double, double) {
    return Eigen::Matrix3d::Zero().eval();
  };
  return m;
}

MetricField metric_cylinder() {
  MetricField m;
  m.g = [](double, double) { return Eigen::Matrix2d::Identity().eval(); };
  m.immersion = [](double x, double y) {
    return Eigen::Vector3d(std::sin(x), y, std::cos(x));
  };
  m.immersion_grad = [](double x, double) {
    Matrix32d d;
    d << std::cos(x), 0, 0, 1, -std::sin(x), 0;
    return d;
  };
  m.immersion_hess = [](double x, double) {
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    h.col(0) = Eigen::Vector3d(-std::sin(x), 0.0, -std::cos(x));
    return h;
  };
  return m;
}

MetricField metric_stretched(double beta) {
  MetricField m;
  m.g = [beta](double, double y) {
    Eigen::Matrix2d g = Eigen::Matrix2d::Identity();
    g(0, 0) = 1.0 + beta * y * y;
    return g;
  };
  return m;
}

MetricField metric_custom(MetricClosure g) {
  MetricField m;
  m.g = std::move(g);
  return m;
}

void check_metric_spd(const MetricField& g, const DGSpace& s) {
  const int ne = static_cast<int>(s.mesh->elements.size());
  for (int k = 0; k < ne; ++k) {
    const ElemGeom& eg = s.geom[k];
    for (int q = 0; q < eg.qpts.rows(); ++q) {
      const Eigen::Matrix2d m = g.at(eg.qpts(q, 0), eg.qpts(q, 1));
      const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
      const double asym = std::abs(m(0, 1) - m(1, 0));
      if (!(m(0, 0) > 0.0) || !(det > 0.0) || asym > 1e-12) {
        std::ostringstream os;
        os << "metric is not SPD at point (" << eg.qpts(q, 0) << ", "
           << eg.qpts(q, 1) << ") in element " << k;
        throw Error(os.str());
      }
    }
  }
}

double metric_l1_norm(const MetricField& g, const DGSpace& s) {
  const int ne = static_cast<int>(s.mesh->elements.size());
  std::vector<double> part(ne, 0.0);
  parallel_for(ne, [&](int k) {
    const ElemGeom& eg = s.geom[k];
    double acc = 0.0;
    for (int q = 0; q < eg.qpts.rows(); ++q)
      acc += eg.qw(q) * g.at(eg.qpts(q, 0), eg.qpts(q, 1)).norm();
    part[k] = acc;
  });
  double total = 0.0;
  for (double v : part) total += v;
  return total;
}

}  // namespace ldg
