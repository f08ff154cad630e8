#include "ldg/reference.hpp"

#include <cmath>

namespace ldg::ref {

double h2_inner(const DGField& u, const DGField& v, H2Mode mode) {
  const DGSpace& s = *u.space;
  double sum = 0.0;
  for (int e = 0; e < s.mesh->num_elements(); ++e) {
    const Evaluation eu = evaluate(u, e, s.qrule.points);
    const Evaluation ev = evaluate(v, e, s.qrule.points);
    Eigen::VectorXd det;
    s.geometry_at(e, s.qrule.points, nullptr, nullptr, &det);
    for (int q = 0; q < s.npq(); ++q) {
      const double w = s.qrule.weights[q] * det[q];
      for (int c = 0; c < u.comps; ++c) {
        sum += w * (eu.hess[c](q, 0) * ev.hess[c](q, 0) +
                    2.0 * eu.hess[c](q, 1) * ev.hess[c](q, 1) +
                    eu.hess[c](q, 2) * ev.hess[c](q, 2));
        if (mode == H2Mode::Full)
          sum += w * eu.value(q, c) * ev.value(q, c);
      }
    }
  }
  for (int ie : s.mesh->interior_edges) {
    const Edge& ed = s.mesh->edges[ie];
    const Eigen::MatrixX2d rm = s.edge_ref_points(ie, true);
    const Eigen::MatrixX2d rp = s.edge_ref_points(ie, false);
    const Evaluation um = evaluate(u, ed.elem_minus, rm);
    const Evaluation up = evaluate(u, ed.elem_plus, rp);
    const Evaluation vm = evaluate(v, ed.elem_minus, rm);
    const Evaluation vp = evaluate(v, ed.elem_plus, rp);
    const double w1 = 1.0 / ed.length;
    const double w3 = w1 * w1 * w1;
    for (int q = 0; q < s.neq(); ++q) {
      const double w = s.erule.weights[q] * ed.length;
      for (int c = 0; c < u.comps; ++c) {
        const double ju = um.value(q, c) - up.value(q, c);
        const double jv = vm.value(q, c) - vp.value(q, c);
        const double jux = um.grad[c](q, 0) - up.grad[c](q, 0);
        const double juy = um.grad[c](q, 1) - up.grad[c](q, 1);
        const double jvx = vm.grad[c](q, 0) - vp.grad[c](q, 0);
        const double jvy = vm.grad[c](q, 1) - vp.grad[c](q, 1);
        sum += w * (w1 * (jux * jvx + juy * jvy) + w3 * ju * jv);
      }
    }
  }
  return sum;
}

double hessian_inner(const DGField& u, const DGField& v) {
  const DGSpace& s = *u.space;
  double sum = 0.0;
  for (int e = 0; e < s.mesh->num_elements(); ++e) {
    const Evaluation eu = evaluate(u, e, s.qrule.points);
    const Evaluation ev = evaluate(v, e, s.qrule.points);
    Eigen::VectorXd det;
    s.geometry_at(e, s.qrule.points, nullptr, nullptr, &det);
    for (int q = 0; q < s.npq(); ++q)
      for (int c = 0; c < u.comps; ++c)
        sum += s.qrule.weights[q] * det[q] *
               (eu.hess[c](q, 0) * ev.hess[c](q, 0) +
                2.0 * eu.hess[c](q, 1) * ev.hess[c](q, 1) +
                eu.hess[c](q, 2) * ev.hess[c](q, 2));
  }
  return sum;
}

}  // namespace ldg::ref
