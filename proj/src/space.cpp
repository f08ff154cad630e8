#include "ldg/space.hpp"

#include <cmath>

#include "ldg/common.hpp"

namespace ldg {

namespace {

const Eigen::Vector2d kTriCorner[3] = {{0, 0}, {1, 0}, {0, 1}};
const Eigen::Vector2d kQuadCorner[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};

Eigen::Vector2d ref_corner(CellKind kind, int i) {
  return kind == CellKind::Tri ? kTriCorner[i] : kQuadCorner[i];
}

}  // namespace

void DGSpace::geometry_at(int elem, const Eigen::MatrixX2d& ref_pts,
                          Eigen::MatrixX2d* phys,
                          std::vector<Eigen::Matrix2d>* invJt,
                          Eigen::VectorXd* det) const {
  const int np = static_cast<int>(ref_pts.rows());
  if (phys) phys->resize(np, 2);
  if (invJt) invJt->resize(np);
  if (det) det->resize(np);
  if (mesh->kind == CellKind::Tri) {
    const Eigen::Vector2d p0 = mesh->vertex_of(elem, 0),
                          p1 = mesh->vertex_of(elem, 1),
                          p2 = mesh->vertex_of(elem, 2);
    Eigen::Matrix2d J;
    J.col(0) = p1 - p0;
    J.col(1) = p2 - p0;
    const double d = J.determinant();
    const Eigen::Matrix2d it = J.inverse().transpose();
    for (int p = 0; p < np; ++p) {
      if (phys)
        phys->row(p) =
            (p0 + J * ref_pts.row(p).transpose()).transpose();
      if (invJt) (*invJt)[p] = it;
      if (det) (*det)[p] = d;
    }
  } else {
    const Eigen::Vector2d p0 = mesh->vertex_of(elem, 0),
                          p1 = mesh->vertex_of(elem, 1),
                          p2 = mesh->vertex_of(elem, 2),
                          p3 = mesh->vertex_of(elem, 3);
    const Eigen::Vector2d c = p0 - p1 + p2 - p3;
    for (int p = 0; p < np; ++p) {
      const double xi = ref_pts(p, 0), eta = ref_pts(p, 1);
      if (phys)
        phys->row(p) = ((1 - xi) * (1 - eta) * p0 + xi * (1 - eta) * p1 +
                        xi * eta * p2 + (1 - xi) * eta * p3)
                           .transpose();
      Eigen::Matrix2d J;
      J.col(0) = (p1 - p0) + eta * c;
      J.col(1) = (p3 - p0) + xi * c;
      if (det) (*det)[p] = J.determinant();
      if (invJt) (*invJt)[p] = J.inverse().transpose();
    }
  }
}

Eigen::MatrixX2d DGSpace::edge_ref_points(int e, bool minus_side) const {
  const Edge& ed = mesh->edges[e];
  const int vpe = mesh->verts_per_elem();
  const int nq = neq();
  Eigen::MatrixX2d pts(nq, 2);
  for (int q = 0; q < nq; ++q) {
    const double t = erule.points[q];
    Eigen::Vector2d r;
    if (minus_side) {
      const int l = ed.local_minus;
      r = (1 - t) * ref_corner(mesh->kind, l) +
          t * ref_corner(mesh->kind, (l + 1) % vpe);
    } else {
      const int l = ed.local_plus;
      const double s = ed.flip_plus ? 1 - t : t;
      r = (1 - s) * ref_corner(mesh->kind, l) +
          s * ref_corner(mesh->kind, (l + 1) % vpe);
    }
    pts.row(q) = r.transpose();
  }
  return pts;
}

DGSpace::DGSpace(const Mesh& m, int deg, int elem_pts, int edge_pts)
    : mesh(&m), degree(deg), ref(m.kind, deg) {
  const int en = elem_pts > 0 ? elem_pts : deg + 2;
  const int eq = edge_pts > 0 ? edge_pts : deg + 1;
  elem_pts_n = en;
  edge_pts_n = eq;
  qrule = (m.kind == CellKind::Tri) ? triangle_rule(en) : square_rule(en);
  erule = gauss_legendre(eq);

  const ReferenceBasis::Tables rt = ref.tabulate(qrule.points);
  const int ne = m.num_elements();
  const int nq = qrule.nq();
  const int nd = ref.ndof;

  geom.resize(ne);
  mass_llt.resize(ne);
  for (int e = 0; e < ne; ++e) {
    ElemGeom& g = geom[e];
    Eigen::VectorXd det;
    geometry_at(e, qrule.points, &g.qpts, &g.invJt, &det);
    g.qw = qrule.weights.cwiseProduct(det);
    if (m.kind == CellKind::Quad) {
      g.d2f = m.vertex_of(e, 0) - m.vertex_of(e, 1) + m.vertex_of(e, 2) -
              m.vertex_of(e, 3);
    }
    g.val = rt.val;
    g.dx.resize(nq, nd);
    g.dy.resize(nq, nd);
    g.hxx.resize(nq, nd);
    g.hxy.resize(nq, nd);
    g.hyy.resize(nq, nd);
    for (int q = 0; q < nq; ++q) {
      const Eigen::Matrix2d& A = g.invJt[q];
      for (int j = 0; j < nd; ++j) {
        const double gx = A(0, 0) * rt.dx(q, j) + A(0, 1) * rt.dy(q, j);
        const double gy = A(1, 0) * rt.dx(q, j) + A(1, 1) * rt.dy(q, j);
        g.dx(q, j) = gx;
        g.dy(q, j) = gy;
        // bi-affine correction: subtract (grad_phys . d2f) from the mixed
        // reference derivative before the two-sided Jacobian transform
        const double corr = gx * g.d2f.x() + gy * g.d2f.y();
        const double mxx = rt.dxx(q, j);
        const double mxy = rt.dxy(q, j) - corr;
        const double myy = rt.dyy(q, j);
        g.hxx(q, j) = A(0, 0) * A(0, 0) * mxx + 2 * A(0, 0) * A(0, 1) * mxy +
                      A(0, 1) * A(0, 1) * myy;
        g.hxy(q, j) = A(0, 0) * A(1, 0) * mxx +
                      (A(0, 0) * A(1, 1) + A(0, 1) * A(1, 0)) * mxy +
                      A(0, 1) * A(1, 1) * myy;
        g.hyy(q, j) = A(1, 0) * A(1, 0) * mxx + 2 * A(1, 0) * A(1, 1) * mxy +
                      A(1, 1) * A(1, 1) * myy;
      }
    }
    mass_llt[e].compute(g.val.transpose() * g.qw.asDiagonal() * g.val);
    if (mass_llt[e].info() != Eigen::Success)
      throw Error("space: element mass matrix not SPD on element " +
                  std::to_string(e));
  }

  trace.resize(m.num_edges());
  for (int ie = 0; ie < m.num_edges(); ++ie) {
    const Edge& ed = m.edges[ie];
    EdgeTrace& t = trace[ie];
    const int nqe = neq();
    t.qpts.resize(nqe, 2);
    t.qw = erule.weights * ed.length;
    const Eigen::Vector2d a = m.vertices[ed.v0], b = m.vertices[ed.v1];
    for (int q = 0; q < nqe; ++q)
      t.qpts.row(q) =
          ((1 - erule.points[q]) * a + erule.points[q] * b).transpose();

    auto make_side = [&](bool minus, Eigen::MatrixXd& val, Eigen::MatrixXd& dx,
                         Eigen::MatrixXd& dy) {
      const int elem = minus ? ed.elem_minus : ed.elem_plus;
      const Eigen::MatrixX2d rp = edge_ref_points(ie, minus);
      const ReferenceBasis::Tables bt = ref.tabulate(rp);
      std::vector<Eigen::Matrix2d> it;
      geometry_at(elem, rp, nullptr, &it, nullptr);
      val = bt.val;
      dx.resize(nqe, nd);
      dy.resize(nqe, nd);
      for (int q = 0; q < nqe; ++q)
        for (int j = 0; j < nd; ++j) {
          dx(q, j) = it[q](0, 0) * bt.dx(q, j) + it[q](0, 1) * bt.dy(q, j);
          dy(q, j) = it[q](1, 0) * bt.dx(q, j) + it[q](1, 1) * bt.dy(q, j);
        }
    };
    make_side(true, t.val_m, t.dx_m, t.dy_m);
    if (!ed.is_boundary()) make_side(false, t.val_p, t.dx_p, t.dy_p);
  }
}

Evaluation evaluate(const DGField& f, int elem,
                    const Eigen::MatrixX2d& ref_points) {
  const DGSpace& s = *f.space;
  if (elem < 0 || elem >= s.mesh->num_elements())
    throw Error("evaluate: element index out of range");
  const int np = static_cast<int>(ref_points.rows());
  const ReferenceBasis::Tables rt = s.ref.tabulate(ref_points);
  std::vector<Eigen::Matrix2d> it;
  s.geometry_at(elem, ref_points, nullptr, &it, nullptr);
  const Eigen::Vector2d d2f = s.geom[elem].d2f;

  Evaluation out;
  out.value.resize(np, f.comps);
  out.grad.assign(f.comps, Eigen::MatrixXd(np, 2));
  out.hess.assign(f.comps, Eigen::MatrixXd(np, 3));
  for (int c = 0; c < f.comps; ++c) {
    const Eigen::VectorXd u = f.elem_coeffs(c, elem);
    const Eigen::VectorXd v = rt.val * u;
    const Eigen::VectorXd rdx = rt.dx * u, rdy = rt.dy * u;
    const Eigen::VectorXd rxx = rt.dxx * u, rxy = rt.dxy * u, ryy = rt.dyy * u;
    for (int p = 0; p < np; ++p) {
      const Eigen::Matrix2d& A = it[p];
      const double gx = A(0, 0) * rdx[p] + A(0, 1) * rdy[p];
      const double gy = A(1, 0) * rdx[p] + A(1, 1) * rdy[p];
      out.value(p, c) = v[p];
      out.grad[c](p, 0) = gx;
      out.grad[c](p, 1) = gy;
      const double corr = gx * d2f.x() + gy * d2f.y();
      Eigen::Matrix2d Hm;
      Hm << rxx[p], rxy[p] - corr, rxy[p] - corr, ryy[p];
      const Eigen::Matrix2d H = A * Hm * A.transpose();
      out.hess[c](p, 0) = H(0, 0);
      out.hess[c](p, 1) = 0.5 * (H(0, 1) + H(1, 0));
      out.hess[c](p, 2) = H(1, 1);
    }
  }
  return out;
}

DGField interpolate(const DGSpace& s, int comps, const VectorClosure& v) {
  DGField f(s, comps);
  const int ne = s.mesh->num_elements();
  for (int e = 0; e < ne; ++e) {
    Eigen::MatrixX2d phys;
    s.geometry_at(e, s.ref.nodes, &phys, nullptr, nullptr);
    for (int i = 0; i < s.nloc(); ++i) {
      const Eigen::VectorXd vv = v(phys(i, 0), phys(i, 1));
      if (vv.size() != comps) throw Error("interpolate: component mismatch");
      for (int c = 0; c < comps; ++c) f.coef(c, e, i) = vv[c];
    }
  }
  return f;
}

DGField interpolate_scalar(const DGSpace& s, const ScalarClosure& v) {
  return interpolate(s, 1, [&](double x, double y) {
    Eigen::VectorXd r(1);
    r[0] = v(x, y);
    return r;
  });
}

Eigen::VectorXd integral(const DGField& f) {
  const DGSpace& s = *f.space;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(f.comps);
  for (int e = 0; e < s.mesh->num_elements(); ++e)
    for (int c = 0; c < f.comps; ++c)
      sum[c] += s.geom[e].qw.dot(s.geom[e].val * f.elem_coeffs(c, e));
  return sum;
}

double l2_norm(const DGField& f) {
  const DGSpace& s = *f.space;
  double sum = 0.0;
  for (int e = 0; e < s.mesh->num_elements(); ++e)
    for (int c = 0; c < f.comps; ++c) {
      const Eigen::VectorXd v = s.geom[e].val * f.elem_coeffs(c, e);
      sum += s.geom[e].qw.dot(v.cwiseAbs2());
    }
  return std::sqrt(sum);
}

double l4_norm(const DGField& f) {
  const DGSpace& s = *f.space;
  double sum = 0.0;
  for (int e = 0; e < s.mesh->num_elements(); ++e) {
    const int nq = s.npq();
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(nq);
    for (int c = 0; c < f.comps; ++c)
      sq += (s.geom[e].val * f.elem_coeffs(c, e)).cwiseAbs2();
    sum += s.geom[e].qw.dot(sq.cwiseAbs2());
  }
  return std::pow(sum, 0.25);
}

double broken_grad_norm(const DGField& f) {
  const DGSpace& s = *f.space;
  double sum = 0.0;
  for (int e = 0; e < s.mesh->num_elements(); ++e)
    for (int c = 0; c < f.comps; ++c) {
      const Eigen::VectorXd u = f.elem_coeffs(c, e);
      sum += s.geom[e].qw.dot((s.geom[e].dx * u).cwiseAbs2() +
                              (s.geom[e].dy * u).cwiseAbs2());
    }
  return std::sqrt(sum);
}

double l2_distance(const DGField& f, int comps, const VectorClosure& exact) {
  const DGSpace& s = *f.space;
  double sum = 0.0;
  for (int e = 0; e < s.mesh->num_elements(); ++e) {
    const ElemGeom& g = s.geom[e];
    Eigen::MatrixXd vals(s.npq(), comps);
    for (int c = 0; c < comps; ++c) vals.col(c) = g.val * f.elem_coeffs(c, e);
    for (int q = 0; q < s.npq(); ++q) {
      const Eigen::VectorXd ex = exact(g.qpts(q, 0), g.qpts(q, 1));
      for (int c = 0; c < comps; ++c)
        sum += g.qw[q] * (vals(q, c) - ex[c]) * (vals(q, c) - ex[c]);
    }
  }
  return std::sqrt(sum);
}

double jump_value_norm(const DGField& f, double pow) {
  const DGSpace& s = *f.space;
  double sum = 0.0;
  for (int ie : s.mesh->interior_edges) {
    const Edge& ed = s.mesh->edges[ie];
    const EdgeTrace& t = s.trace[ie];
    const double w = std::pow(ed.length, 2.0 * pow);
    for (int c = 0; c < f.comps; ++c) {
      const Eigen::VectorXd j = t.val_m * f.elem_coeffs(c, ed.elem_minus) -
                                t.val_p * f.elem_coeffs(c, ed.elem_plus);
      sum += w * t.qw.dot(j.cwiseAbs2());
    }
  }
  return std::sqrt(sum);
}

double jump_grad_norm(const DGField& f, double pow) {
  const DGSpace& s = *f.space;
  double sum = 0.0;
  for (int ie : s.mesh->interior_edges) {
    const Edge& ed = s.mesh->edges[ie];
    const EdgeTrace& t = s.trace[ie];
    const double w = std::pow(ed.length, 2.0 * pow);
    for (int c = 0; c < f.comps; ++c) {
      const Eigen::VectorXd um = f.elem_coeffs(c, ed.elem_minus);
      const Eigen::VectorXd up = f.elem_coeffs(c, ed.elem_plus);
      sum += w * t.qw.dot((t.dx_m * um - t.dx_p * up).cwiseAbs2() +
                          (t.dy_m * um - t.dy_p * up).cwiseAbs2());
    }
  }
  return std::sqrt(sum);
}

EdgeValues edge_values(const DGField& f, int edge) {
  const DGSpace& s = *f.space;
  const Edge& ed = s.mesh->edges[edge];
  const EdgeTrace& t = s.trace[edge];
  const int nqe = s.neq();
  EdgeValues ev;
  ev.val_m.resize(nqe, f.comps);
  ev.grad_m.resize(nqe, 2 * f.comps);
  if (!ed.is_boundary()) {
    ev.val_p.resize(nqe, f.comps);
    ev.grad_p.resize(nqe, 2 * f.comps);
  }
  for (int c = 0; c < f.comps; ++c) {
    const Eigen::VectorXd um = f.elem_coeffs(c, ed.elem_minus);
    ev.val_m.col(c) = t.val_m * um;
    ev.grad_m.col(2 * c) = t.dx_m * um;
    ev.grad_m.col(2 * c + 1) = t.dy_m * um;
    if (!ed.is_boundary()) {
      const Eigen::VectorXd up = f.elem_coeffs(c, ed.elem_plus);
      ev.val_p.col(c) = t.val_p * up;
      ev.grad_p.col(2 * c) = t.dx_p * up;
      ev.grad_p.col(2 * c + 1) = t.dy_p * up;
    }
  }
  return ev;
}

DGField random_field(const DGSpace& s, int comps, Rng& rng, double amplitude) {
  DGField f(s, comps);
  for (Eigen::Index i = 0; i < f.coeffs.size(); ++i)
    f.coeffs[i] = amplitude * rng.normal();
  return f;
}

}  // namespace ldg
