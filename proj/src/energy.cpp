#include "ldg/energy.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ldg/common.hpp"

namespace ldg {

namespace {

using Triplet = Eigen::Triplet<double>;

void check_fields(const LiftingAssembly& a, const DGField& y,
                  const DGField& v) {
  if (y.space != a.host || v.space != a.host || y.comps != v.comps)
    throw Error("energy: fields do not live on the assembly's host space");
}

void check_mode(const EnergyParams& p, const LiftingAssembly& a) {
  if (!p.metric.g) throw Error("energy: metric closure not set");
  if (!(p.gamma0 > 0.0) || !(p.gamma1 > 0.0))
    throw Error("energy: stabilization parameters must be positive");
  const bool active = a.skel == Skeleton::Active;
  if ((p.mode == BoundaryMode::Dirichlet) != active)
    throw Error("energy: boundary mode and assembly skeleton disagree");
}

// Zero-mean requirement for free-boundary forcing.
void check_free_forcing(const EnergyParams& p, const DGSpace& s) {
  if (p.mode != BoundaryMode::Free || !p.forcing) return;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  double fmax = 0.0;
  for (int k = 0; k < s.mesh->num_elements(); ++k) {
    const ElemGeom& eg = s.geom[k];
    for (int q = 0; q < eg.qpts.rows(); ++q) {
      const Eigen::VectorXd f = p.forcing(eg.qpts(q, 0), eg.qpts(q, 1));
      mean += eg.qw(q) * f.head<3>();
      fmax = std::max(fmax, f.cwiseAbs().maxCoeff());
    }
  }
  const double tol = 1e-10 * s.mesh->domain_area() * fmax;
  if (fmax > 0.0 && mean.cwiseAbs().maxCoeff() > tol) {
    std::ostringstream os;
    os << "free-boundary forcing must have zero mean, got integral ("
       << mean(0) << ", " << mean(1) << ", " << mean(2) << ")";
    throw Error(os.str());
  }
}

// Jumps of a field on one active edge, boundary data subtracted on Dirichlet
// boundary edges when closures are given. val is nqe x C, grad nqe x 2C.
struct EdgeJump {
  Eigen::MatrixXd val, grad;
};

EdgeJump edge_jump(const DGField& f, int ie, const VectorClosure& bval,
                   const VectorClosure& bgrad) {
  const DGSpace& s = *f.space;
  const Edge& ed = s.mesh->edges[ie];
  const EdgeValues ev = edge_values(f, ie);
  EdgeJump j;
  if (!ed.is_boundary()) {
    j.val = ev.val_m - ev.val_p;
    j.grad = ev.grad_m - ev.grad_p;
    return j;
  }
  j.val = ev.val_m;
  j.grad = ev.grad_m;
  const EdgeTrace& t = s.trace[ie];
  for (int q = 0; q < t.qpts.rows(); ++q) {
    const double x = t.qpts(q, 0), y = t.qpts(q, 1);
    if (bval) j.val.row(q) -= bval(x, y).transpose();
    if (bgrad) j.grad.row(q) -= bgrad(x, y).transpose();
  }
  return j;
}

// Raw quadrature sums shared by the energy and the flow form:
//   frob = sum_c (Gi H(y_c) Gi, Gi H(v_c) Gi),  tr the trace pairing,
//   gj   = sum over active edges of h^-1 ([grad y],[grad v]),
//   vj   = the h^-3 value-jump pairing.
struct PairSums {
  double frob = 0.0, tr = 0.0, gj = 0.0, vj = 0.0;
};

PairSums pair_sums(const MetricField& g, const LiftingAssembly& a,
                   const DGField& y, const DGField& v, bool with_data,
                   const VectorClosure& bval, const VectorClosure& bgrad) {
  const DGSpace& s = *a.host;
  const int ne = s.mesh->num_elements();
  const int C = y.comps;

  DiscreteHessianField hy = discrete_hessian(a, y);
  DiscreteHessianField hv = discrete_hessian(a, v);
  if (with_data && (bval || bgrad)) {
    const DiscreteHessianField off = hessian_data_offset(a, C, bval, bgrad);
    for (int k = 0; k < ne; ++k) {
      hy.vals[k] += off.vals[k];
      hv.vals[k] += off.vals[k];
    }
  }

  std::vector<double> pf(ne, 0.0), pt(ne, 0.0);
  std::vector<std::string> errs(ne);
  parallel_for(ne, [&](int k) {
    try {
      const ElemGeom& eg = s.geom[k];
      double af = 0.0, at = 0.0;
      for (int q = 0; q < eg.qpts.rows(); ++q) {
        const Eigen::Matrix2d gi = g.inv_sqrt(eg.qpts(q, 0), eg.qpts(q, 1));
        for (int c = 0; c < C; ++c) {
          Eigen::Matrix2d my, mv;
          my << hy.vals[k](q, 4 * c), hy.vals[k](q, 4 * c + 1),
              hy.vals[k](q, 4 * c + 2), hy.vals[k](q, 4 * c + 3);
          mv << hv.vals[k](q, 4 * c), hv.vals[k](q, 4 * c + 1),
              hv.vals[k](q, 4 * c + 2), hv.vals[k](q, 4 * c + 3);
          const Eigen::Matrix2d ay = gi * my * gi, av = gi * mv * gi;
          af += eg.qw(q) * ay.cwiseProduct(av).sum();
          at += eg.qw(q) * ay.trace() * av.trace();
        }
      }
      pf[k] = af;
      pt[k] = at;
    } catch (const std::exception& ex) {
      errs[k] = ex.what();
    }
  });
  for (const std::string& e : errs)
    if (!e.empty()) throw Error(e);

  PairSums ps;
  for (int k = 0; k < ne; ++k) {
    ps.frob += pf[k];
    ps.tr += pt[k];
  }

  const VectorClosure none;
  for (int ie = 0; ie < static_cast<int>(s.mesh->edges.size()); ++ie) {
    if (!a.edge_active(ie)) continue;
    const Edge& ed = s.mesh->edges[ie];
    const EdgeTrace& t = s.trace[ie];
    const EdgeJump jy = edge_jump(y, ie, with_data ? bval : none,
                                  with_data ? bgrad : none);
    const EdgeJump jv = edge_jump(v, ie, with_data ? bval : none,
                                  with_data ? bgrad : none);
    const double w1 = 1.0 / ed.length;
    const double w3 = w1 * w1 * w1;
    double ag = 0.0, avl = 0.0;
    for (int c = 0; c < C; ++c) {
      ag += t.qw.dot(jy.grad.col(2 * c).cwiseProduct(jv.grad.col(2 * c)) +
                     jy.grad.col(2 * c + 1)
                         .cwiseProduct(jv.grad.col(2 * c + 1)));
      avl += t.qw.dot(jy.val.col(c).cwiseProduct(jv.val.col(c)));
    }
    ps.gj += w1 * ag;
    ps.vj += w3 * avl;
  }
  return ps;
}

double forcing_pairing(const EnergyParams& p, const DGField& y) {
  if (!p.forcing) return 0.0;
  const DGSpace& s = *y.space;
  const int ne = s.mesh->num_elements();
  std::vector<double> part(ne, 0.0);
  parallel_for(ne, [&](int k) {
    const ElemGeom& eg = s.geom[k];
    Eigen::MatrixXd yv(eg.qpts.rows(), y.comps);
    for (int c = 0; c < y.comps; ++c)
      yv.col(c) = eg.val * y.elem_coeffs(c, k);
    double acc = 0.0;
    for (int q = 0; q < eg.qpts.rows(); ++q) {
      const Eigen::VectorXd f = p.forcing(eg.qpts(q, 0), eg.qpts(q, 1));
      acc += eg.qw(q) * f.head(y.comps).dot(yv.row(q));
    }
    part[k] = acc;
  });
  double sum = 0.0;
  for (double v : part) sum += v;
  return sum;
}

// vec(Gi M Gi) = P vec(M) with vec index 2i+j.
Eigen::Matrix4d sandwich_map(const Eigen::Matrix2d& gi) {
  Eigen::Matrix4d p;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          p(2 * i + j, 2 * a + b) = gi(i, a) * gi(b, j);
  return p;
}

void scatter_block(std::vector<Triplet>& out, const Eigen::MatrixXd& blk,
                   int row0, int col0) {
  for (int i = 0; i < blk.rows(); ++i)
    for (int j = 0; j < blk.cols(); ++j)
      if (blk(i, j) != 0.0) out.emplace_back(row0 + i, col0 + j, blk(i, j));
}

// Shared assembler for the quadratic forms built from the reconstructed
// Hessian plus jump penalties: coefficients cf, ct weight the Frobenius and
// trace pairings, wv/wg scale the h^-3 and h^-1 jump penalties.
AhOperator assemble_quadratic(const MetricField& g, const LiftingAssembly& a,
                              double cf, double ct, double wv0, double wg0,
                              bool with_data, const VectorClosure& bval,
                              const VectorClosure& bgrad) {
  const DGSpace& s = *a.host;
  const int ne = s.mesh->num_elements(), nl = s.nloc(), n = s.num_dofs();
  const std::vector<ElementHessOp> ops = hessian_ops(a);

  with_data = with_data && (bval || bgrad);
  DiscreteHessianField off;
  if (with_data) off = hessian_data_offset(a, 3, bval, bgrad);

  std::vector<Eigen::MatrixXd> loc(ne), locload(ne);
  std::vector<double> loccst(ne, 0.0);
  std::vector<std::string> errs(ne);
  const Eigen::Vector4d tvec(1.0, 0.0, 0.0, 1.0);
  parallel_for(ne, [&](int k) {
    try {
      const ElemGeom& eg = s.geom[k];
      const Eigen::MatrixXd& op = ops[k].op;
      const int ncol = static_cast<int>(op.cols());
      Eigen::MatrixXd L = Eigen::MatrixXd::Zero(ncol, ncol);
      Eigen::MatrixXd Ld;
      if (with_data) Ld = Eigen::MatrixXd::Zero(ncol, 3);
      double cst = 0.0;
      for (int q = 0; q < eg.qpts.rows(); ++q) {
        const Eigen::Matrix2d gi = g.inv_sqrt(eg.qpts(q, 0), eg.qpts(q, 1));
        const Eigen::Matrix4d p = sandwich_map(gi);
        const Eigen::Vector4d pt = p.transpose() * tvec;
        const Eigen::Matrix4d Q =
            eg.qw(q) * (cf * (p.transpose() * p).eval() + ct * pt * pt.transpose());
        const auto rows = op.middleRows(4 * q, 4);
        L.noalias() += rows.transpose() * (Q * rows);
        if (with_data) {
          for (int c = 0; c < 3; ++c) {
            const Eigen::Vector4d o =
                off.vals[k].row(q).segment<4>(4 * c).transpose();
            Ld.col(c).noalias() += rows.transpose() * (Q * o);
            cst += o.dot(Q * o);
          }
        }
      }
      loc[k] = L;
      if (with_data) {
        locload[k] = Ld;
        loccst[k] = cst;
      }
    } catch (const std::exception& ex) {
      errs[k] = ex.what();
    }
  });
  for (const std::string& e : errs)
    if (!e.empty()) throw Error(e);

  AhOperator out;
  out.load = Eigen::MatrixXd::Zero(n, 3);
  std::vector<Triplet> tri;
  for (int k = 0; k < ne; ++k) {
    const std::vector<int>& patch = ops[k].patch;
    const int np = static_cast<int>(patch.size());
    for (int bi = 0; bi < np; ++bi) {
      for (int bj = 0; bj < np; ++bj)
        scatter_block(tri, loc[k].block(bi * nl, bj * nl, nl, nl),
                      patch[bi] * nl, patch[bj] * nl);
      if (with_data)
        out.load.middleRows(patch[bi] * nl, nl) +=
            locload[k].middleRows(bi * nl, nl);
    }
    out.constant += loccst[k];
  }

  for (int ie = 0; ie < static_cast<int>(s.mesh->edges.size()); ++ie) {
    if (!a.edge_active(ie)) continue;
    const Edge& ed = s.mesh->edges[ie];
    const EdgeTrace& t = s.trace[ie];
    const double wv = wv0 / (ed.length * ed.length * ed.length);
    const double wg = wg0 / ed.length;
    const auto W = t.qw.asDiagonal();
    if (ed.is_boundary()) {
      const Eigen::MatrixXd B =
          wv * (t.val_m.transpose() * W * t.val_m) +
          wg * (t.dx_m.transpose() * W * t.dx_m +
                t.dy_m.transpose() * W * t.dy_m);
      const int rm = ed.elem_minus * nl;
      scatter_block(tri, B, rm, rm);
      if (with_data) {
        const int nq = static_cast<int>(t.qpts.rows());
        Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(nq, 3);
        Eigen::MatrixXd dphi = Eigen::MatrixXd::Zero(nq, 6);
        for (int q = 0; q < nq; ++q) {
          const double x = t.qpts(q, 0), y = t.qpts(q, 1);
          if (bval) phi.row(q) = bval(x, y).transpose();
          if (bgrad) dphi.row(q) = bgrad(x, y).transpose();
        }
        for (int c = 0; c < 3; ++c) {
          out.load.block(rm, c, nl, 1) -=
              wv * (t.val_m.transpose() * (t.qw.cwiseProduct(phi.col(c)))) +
              wg * (t.dx_m.transpose() *
                        (t.qw.cwiseProduct(dphi.col(2 * c))) +
                    t.dy_m.transpose() *
                        (t.qw.cwiseProduct(dphi.col(2 * c + 1))));
          out.constant +=
              wv * t.qw.dot(phi.col(c).cwiseAbs2()) +
              wg * t.qw.dot(dphi.col(2 * c).cwiseAbs2() +
                            dphi.col(2 * c + 1).cwiseAbs2());
        }
      }
      continue;
    }
    Eigen::MatrixXd Jv(s.neq(), 2 * nl), Jx(s.neq(), 2 * nl),
        Jy(s.neq(), 2 * nl);
    Jv << t.val_m, -t.val_p;
    Jx << t.dx_m, -t.dx_p;
    Jy << t.dy_m, -t.dy_p;
    const Eigen::MatrixXd B = wv * (Jv.transpose() * W * Jv) +
                              wg * (Jx.transpose() * W * Jx +
                                    Jy.transpose() * W * Jy);
    const int rm = ed.elem_minus * nl, rp = ed.elem_plus * nl;
    scatter_block(tri, B.topLeftCorner(nl, nl), rm, rm);
    scatter_block(tri, B.topRightCorner(nl, nl), rm, rp);
    scatter_block(tri, B.bottomLeftCorner(nl, nl), rp, rm);
    scatter_block(tri, B.bottomRightCorner(nl, nl), rp, rp);
  }

  out.A.resize(n, n);
  out.A.setFromTriplets(tri.begin(), tri.end());
  return out;
}

// grad y' grad y at the quadrature points of one element, columns
// (11, 22, 12).
Eigen::MatrixX3d first_form_at(const DGField& y, int k) {
  const DGSpace& s = *y.space;
  const ElemGeom& eg = s.geom[k];
  const int nq = static_cast<int>(eg.qpts.rows());
  Eigen::MatrixX3d out = Eigen::MatrixX3d::Zero(nq, 3);
  for (int c = 0; c < y.comps; ++c) {
    const Eigen::VectorXd dx = eg.dx * y.elem_coeffs(c, k);
    const Eigen::VectorXd dy = eg.dy * y.elem_coeffs(c, k);
    out.col(0) += dx.cwiseAbs2();
    out.col(1) += dy.cwiseAbs2();
    out.col(2) += dx.cwiseProduct(dy);
  }
  return out;
}

}  // namespace

EnergyBreakdown energy_Eh(const EnergyParams& p, const LiftingAssembly& a,
                          const DGField& y) {
  check_fields(a, y, y);
  check_mode(p, a);
  check_metric_spd(p.metric, *a.host);
  check_free_forcing(p, *a.host);

  const bool data = p.mode == BoundaryMode::Dirichlet;
  const PairSums ps =
      pair_sums(p.metric, a, y, y, data, p.bc_value, p.bc_grad);

  EnergyBreakdown b;
  b.frobenius = p.mu / 12.0 * ps.frob;
  b.trace = p.mu * p.lambda / (12.0 * (2.0 * p.mu + p.lambda)) * ps.tr;
  b.grad_jump = 0.5 * p.gamma1 * ps.gj;
  b.value_jump = 0.5 * p.gamma0 * ps.vj;
  b.forcing = -forcing_pairing(p, y);
  b.total = b.frobenius + b.trace + b.grad_jump + b.value_jump + b.forcing;
  return b;
}

double metric_defect(const DGField& y, const MetricField& g) {
  const DGSpace& s = *y.space;
  const int ne = s.mesh->num_elements();
  std::vector<double> part(ne, 0.0);
  parallel_for(ne, [&](int k) {
    const ElemGeom& eg = s.geom[k];
    const Eigen::MatrixX3d ff = first_form_at(y, k);
    Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
    for (int q = 0; q < eg.qpts.rows(); ++q) {
      Eigen::Matrix2d r;
      r << ff(q, 0), ff(q, 2), ff(q, 2), ff(q, 1);
      m += eg.qw(q) * (r - g.at(eg.qpts(q, 0), eg.qpts(q, 1)));
    }
    part[k] = m.norm();
  });
  double sum = 0.0;
  for (double v : part) sum += v;
  return sum;
}

double form_ah(const EnergyParams& p, const LiftingAssembly& a,
               const DGField& y, const DGField& v) {
  check_fields(a, y, v);
  check_mode(p, a);
  const bool data = p.mode == BoundaryMode::Dirichlet;
  const PairSums ps =
      pair_sums(p.metric, a, y, v, data, p.bc_value, p.bc_grad);
  return p.mu / 6.0 * ps.frob +
         p.mu * p.lambda / (6.0 * (2.0 * p.mu + p.lambda)) * ps.tr +
         p.gamma1 * ps.gj + p.gamma0 * ps.vj;
}

double AhOperator::apply(const DGField& y, const DGField& v) const {
  const int n = static_cast<int>(A.rows());
  double out = constant;
  for (int c = 0; c < y.comps; ++c) {
    const auto yc = y.coeffs.segment(c * n, n);
    const auto vc = v.coeffs.segment(c * n, n);
    out += yc.dot(A * vc) + load.col(c).dot(yc + vc);
  }
  return out;
}

AhOperator assemble_ah(const EnergyParams& p, const LiftingAssembly& a) {
  check_mode(p, a);
  check_metric_spd(p.metric, *a.host);
  const double cf = p.mu / 6.0;
  const double ct = p.mu * p.lambda / (6.0 * (2.0 * p.mu + p.lambda));
  const bool data = p.mode == BoundaryMode::Dirichlet;
  return assemble_quadratic(p.metric, a, cf, ct, p.gamma0, p.gamma1, data,
                            p.bc_value, p.bc_grad);
}

Eigen::MatrixXd forcing_load(const EnergyParams& p, const DGSpace& s) {
  const int ne = s.mesh->num_elements(), nl = s.nloc();
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(s.num_dofs(), 3);
  if (!p.forcing) return F;
  check_free_forcing(p, s);
  parallel_for(ne, [&](int k) {
    const ElemGeom& eg = s.geom[k];
    const int nq = static_cast<int>(eg.qpts.rows());
    Eigen::MatrixXd fv(nq, 3);
    for (int q = 0; q < nq; ++q)
      fv.row(q) = p.forcing(eg.qpts(q, 0), eg.qpts(q, 1)).head<3>().transpose();
    F.middleRows(k * nl, nl) =
        eg.val.transpose() * eg.qw.asDiagonal() * fv;
  });
  return F;
}

double form_bh(const DGField& y, const DGField& v,
               const std::vector<Eigen::Matrix2d>& mult) {
  if (y.space != v.space || y.comps != v.comps)
    throw Error("form_bh: fields from different spaces");
  const DGSpace& s = *y.space;
  const int ne = s.mesh->num_elements();
  if (static_cast<int>(mult.size()) != ne)
    throw Error("form_bh: one multiplier per element required");
  for (int k = 0; k < ne; ++k) {
    const Eigen::Matrix2d& m = mult[k];
    if (std::abs(m(0, 1) - m(1, 0)) > 1e-12 * std::max(1.0, m.norm())) {
      std::ostringstream os;
      os << "form_bh: asymmetric multiplier on element " << k;
      throw Error(os.str());
    }
  }
  std::vector<double> part(ne, 0.0);
  parallel_for(ne, [&](int k) {
    const ElemGeom& eg = s.geom[k];
    const Eigen::Matrix2d& m = mult[k];
    double acc = 0.0;
    for (int c = 0; c < y.comps; ++c) {
      const Eigen::VectorXd yx = eg.dx * y.elem_coeffs(c, k);
      const Eigen::VectorXd yy = eg.dy * y.elem_coeffs(c, k);
      const Eigen::VectorXd vx = eg.dx * v.elem_coeffs(c, k);
      const Eigen::VectorXd vy = eg.dy * v.elem_coeffs(c, k);
      acc += eg.qw.dot(2.0 * m(0, 0) * vx.cwiseProduct(yx) +
                       2.0 * m(1, 1) * vy.cwiseProduct(yy) +
                       2.0 * m(0, 1) *
                           (vx.cwiseProduct(yy) + vy.cwiseProduct(yx)));
    }
    part[k] = acc;
  });
  double sum = 0.0;
  for (double v2 : part) sum += v2;
  return sum;
}

Eigen::SparseMatrix<double> assemble_bh(const DGField& y) {
  const DGSpace& s = *y.space;
  const int ne = s.mesh->num_elements(), nl = s.nloc(), n = s.num_dofs();
  std::vector<Eigen::MatrixXd> rows(ne);
  parallel_for(ne, [&](int k) {
    const ElemGeom& eg = s.geom[k];
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(3, y.comps * nl);
    for (int c = 0; c < y.comps; ++c) {
      const Eigen::VectorXd yx = eg.qw.cwiseProduct(eg.dx * y.elem_coeffs(c, k));
      const Eigen::VectorXd yy = eg.qw.cwiseProduct(eg.dy * y.elem_coeffs(c, k));
      R.block(0, c * nl, 1, nl) = 2.0 * (eg.dx.transpose() * yx).transpose();
      R.block(1, c * nl, 1, nl) = 2.0 * (eg.dy.transpose() * yy).transpose();
      R.block(2, c * nl, 1, nl) =
          2.0 * (eg.dx.transpose() * yy + eg.dy.transpose() * yx).transpose();
    }
    rows[k] = R;
  });
  std::vector<Triplet> tri;
  for (int k = 0; k < ne; ++k)
    for (int c = 0; c < y.comps; ++c)
      for (int r = 0; r < 3; ++r)
        for (int j = 0; j < nl; ++j) {
          const double v = rows[k](r, c * nl + j);
          if (v != 0.0) tri.emplace_back(3 * k + r, c * n + k * nl + j, v);
        }
  Eigen::SparseMatrix<double> B(3 * ne, y.comps * n);
  B.setFromTriplets(tri.begin(), tri.end());
  return B;
}

Eigen::SparseMatrix<double> multiplier_gram(const Mesh& m) {
  const int ne = m.num_elements();
  std::vector<Triplet> tri;
  tri.reserve(3 * ne);
  for (int k = 0; k < ne; ++k) {
    const double area = m.element_area(k);
    tri.emplace_back(3 * k, 3 * k, area);
    tri.emplace_back(3 * k + 1, 3 * k + 1, area);
    tri.emplace_back(3 * k + 2, 3 * k + 2, 2.0 * area);
  }
  Eigen::SparseMatrix<double> G(3 * ne, 3 * ne);
  G.setFromTriplets(tri.begin(), tri.end());
  return G;
}

PreEnergies energy_preprocess(double sigma_h, const MetricField& g,
                              const LiftingAssembly& a, const DGField& y) {
  check_fields(a, y, y);
  if (sigma_h < 0.0) throw Error("energy_preprocess: sigma_h must be >= 0");
  const DGSpace& s = *a.host;
  const int ne = s.mesh->num_elements();

  std::vector<double> part(ne, 0.0);
  parallel_for(ne, [&](int k) {
    const ElemGeom& eg = s.geom[k];
    const Eigen::MatrixX3d ff = first_form_at(y, k);
    double acc = 0.0;
    for (int q = 0; q < eg.qpts.rows(); ++q) {
      Eigen::Matrix2d r;
      r << ff(q, 0), ff(q, 2), ff(q, 2), ff(q, 1);
      r -= g.at(eg.qpts(q, 0), eg.qpts(q, 1));
      acc += eg.qw(q) * r.squaredNorm();
    }
    part[k] = acc;
  });
  PreEnergies e;
  for (double v : part) e.stretching += v;
  e.stretching *= 0.5;

  const VectorClosure none;
  const PairSums ps = pair_sums(g, a, y, y, false, none, none);
  e.bending = 0.5 * (ps.frob + ps.gj + ps.vj);
  e.total = e.stretching + sigma_h * e.bending;
  return e;
}

PreForms forms_preprocess(const MetricField& g, const LiftingAssembly& a,
                          const DGField& anchor, const DGField& u,
                          const DGField& v) {
  check_fields(a, u, v);
  check_fields(a, anchor, anchor);
  const DGSpace& s = *a.host;
  const int ne = s.mesh->num_elements();

  std::vector<double> part(ne, 0.0);
  parallel_for(ne, [&](int k) {
    const ElemGeom& eg = s.geom[k];
    const Eigen::MatrixX3d ff = first_form_at(anchor, k);
    double acc = 0.0;
    for (int c = 0; c < u.comps; ++c) {
      const Eigen::VectorXd ux = eg.dx * u.elem_coeffs(c, k);
      const Eigen::VectorXd uy = eg.dy * u.elem_coeffs(c, k);
      const Eigen::VectorXd vx = eg.dx * v.elem_coeffs(c, k);
      const Eigen::VectorXd vy = eg.dy * v.elem_coeffs(c, k);
      for (int q = 0; q < eg.qpts.rows(); ++q) {
        Eigen::Matrix2d r;
        r << ff(q, 0), ff(q, 2), ff(q, 2), ff(q, 1);
        r -= g.at(eg.qpts(q, 0), eg.qpts(q, 1));
        const Eigen::Vector2d gu(ux(q), uy(q)), gv(vx(q), vy(q));
        acc += eg.qw(q) * 2.0 * gv.dot(r * gu);
      }
    }
    part[k] = acc;
  });
  PreForms f;
  for (double p : part) f.a_s += p;

  const VectorClosure none;
  const PairSums ps = pair_sums(g, a, u, v, false, none, none);
  f.a_b = ps.frob + ps.gj + ps.vj;
  return f;
}

Eigen::SparseMatrix<double> assemble_as(const MetricField& g,
                                        const DGField& anchor) {
  const DGSpace& s = *anchor.space;
  const int ne = s.mesh->num_elements(), nl = s.nloc();
  std::vector<Eigen::MatrixXd> blocks(ne);
  parallel_for(ne, [&](int k) {
    const ElemGeom& eg = s.geom[k];
    const Eigen::MatrixX3d ff = first_form_at(anchor, k);
    const int nq = static_cast<int>(eg.qpts.rows());
    Eigen::VectorXd w11(nq), w22(nq), w12(nq);
    for (int q = 0; q < nq; ++q) {
      const Eigen::Matrix2d gm = g.at(eg.qpts(q, 0), eg.qpts(q, 1));
      w11(q) = eg.qw(q) * (ff(q, 0) - gm(0, 0));
      w22(q) = eg.qw(q) * (ff(q, 1) - gm(1, 1));
      w12(q) = eg.qw(q) * (ff(q, 2) - gm(0, 1));
    }
    blocks[k] =
        2.0 * (eg.dx.transpose() * w11.asDiagonal() * eg.dx +
               eg.dy.transpose() * w22.asDiagonal() * eg.dy +
               eg.dx.transpose() * w12.asDiagonal() * eg.dy +
               eg.dy.transpose() * w12.asDiagonal() * eg.dx);
  });
  std::vector<Triplet> tri;
  tri.reserve(static_cast<size_t>(ne) * nl * nl);
  for (int k = 0; k < ne; ++k)
    scatter_block(tri, blocks[k], k * nl, k * nl);
  Eigen::SparseMatrix<double> A(s.num_dofs(), s.num_dofs());
  A.setFromTriplets(tri.begin(), tri.end());
  return A;
}

Eigen::SparseMatrix<double> assemble_ab(const MetricField& g,
                                        const LiftingAssembly& a) {
  const VectorClosure none;
  return assemble_quadratic(g, a, 1.0, 0.0, 1.0, 1.0, false, none, none).A;
}

ImmersionEnergyCheck continuous_energy_check(const MetricField& g, double mu,
                                             double lambda,
                                             const DGSpace& s) {
  if (!g.immersion || !g.immersion_grad || !g.immersion_hess)
    throw Error("continuous_energy_check: metric has no analytic immersion");
  const double ctr = lambda / (2.0 * mu + lambda);
  ImmersionEnergyCheck out;
  bool first = true;
  double violation = 0.0;
  for (int k = 0; k < s.mesh->num_elements(); ++k) {
    const ElemGeom& eg = s.geom[k];
    for (int q = 0; q < eg.qpts.rows(); ++q) {
      const double x = eg.qpts(q, 0), y = eg.qpts(q, 1);
      const Eigen::Matrix2d gm = g.at(x, y);
      const Matrix32d dy = g.immersion_grad(x, y);
      violation =
          std::max(violation, (dy.transpose() * dy - gm).norm());
      const Eigen::Matrix3d h = g.immersion_hess(x, y);
      const Eigen::Vector3d nu =
          dy.col(0).cross(dy.col(1)).normalized();
      Eigen::Matrix2d ii;
      ii << h.col(0).dot(nu), h.col(1).dot(nu), h.col(1).dot(nu),
          h.col(2).dot(nu);
      const Eigen::Matrix2d gi = spd_inv_sqrt(gm);
      const Eigen::Matrix2d aii = gi * ii * gi;
      out.e_via_ii += eg.qw(q) * mu / 12.0 *
                      (aii.squaredNorm() + ctr * aii.trace() * aii.trace());
      double sfro = 0.0, str = 0.0;
      for (int m = 0; m < 3; ++m) {
        Eigen::Matrix2d d2;
        d2 << h(m, 0), h(m, 1), h(m, 1), h(m, 2);
        const Eigen::Matrix2d am = gi * d2 * gi;
        sfro += am.squaredNorm();
        str += am.trace() * am.trace();
      }
      out.e_via_hessian += eg.qw(q) * mu / 12.0 * (sfro + ctr * str);
      const double f1 = sfro - aii.squaredNorm();
      if (first) {
        out.f1_min = out.f1_max = f1;
        first = false;
      } else {
        out.f1_min = std::min(out.f1_min, f1);
        out.f1_max = std::max(out.f1_max, f1);
      }
    }
  }
  if (violation > 1e-8) {
    std::ostringstream os;
    os << "continuous_energy_check: immersion violates the metric "
          "constraint, max |grad y' grad y - g| = "
       << violation;
    throw Error(os.str());
  }
  return out;
}

}  // namespace ldg
