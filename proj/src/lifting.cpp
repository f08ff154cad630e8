#include "ldg/lifting.hpp"

#include <cmath>
#include <limits>

#include "ldg/common.hpp"

namespace ldg {

namespace {

bool active_edge(const Mesh& m, int e, Skeleton skel) {
  const Edge& ed = m.edges[e];
  if (!ed.is_boundary()) return true;
  return skel == Skeleton::Active && ed.label == BoundaryLabel::Dirichlet;
}

}  // namespace

LiftingAssembly::LiftingAssembly(const DGSpace& space, int l1_, int l2_,
                                 Skeleton skel_)
    : host(&space), skel(skel_), l1(l1_), l2(l2_) {
  if (l1 < 0 || l2 < 0) throw Error("lifting degrees must be non-negative");
  const Mesh& m = *space.mesh;
  if (l1 == space.degree) {
    aux1 = &space;
  } else {
    aux1_store = std::make_unique<DGSpace>(m, l1, space.elem_pts_n,
                                           space.edge_pts_n);
    aux1 = aux1_store.get();
  }
  if (l2 == l1) {
    aux2 = aux1;
  } else if (l2 == space.degree) {
    aux2 = &space;
  } else {
    aux2_store = std::make_unique<DGSpace>(m, l2, space.elem_pts_n,
                                           space.edge_pts_n);
    aux2 = aux2_store.get();
  }

  cores.resize(m.num_edges());
  parallel_for(m.num_edges(), [&](int e) {
    const Edge& ed = m.edges[e];
    EdgeCore& c = cores[e];
    c.active = active_edge(m, e, skel);
    if (!c.active) return;
    const double s = ed.is_boundary() ? 1.0 : 0.5;
    const Eigen::VectorXd& w = aux1->trace[e].qw;
    const auto lift = [&](const DGSpace& aux, int elem,
                          const Eigen::MatrixXd& tbl) {
      return Eigen::MatrixXd(
          aux.mass_llt[elem].solve(s * tbl.transpose() * w.asDiagonal()));
    };
    const EdgeTrace& t1 = aux1->trace[e];
    const EdgeTrace& t2 = aux2->trace[e];
    c.r_m = lift(*aux1, ed.elem_minus, t1.val_m);
    c.b_m[0] = lift(*aux2, ed.elem_minus, t2.dx_m);
    c.b_m[1] = lift(*aux2, ed.elem_minus, t2.dy_m);
    if (!ed.is_boundary()) {
      c.r_p = lift(*aux1, ed.elem_plus, t1.val_p);
      c.b_p[0] = lift(*aux2, ed.elem_plus, t2.dx_p);
      c.b_p[1] = lift(*aux2, ed.elem_plus, t2.dy_p);
    }
  });
}

double l2_norm(const DiscreteHessianField& h) {
  double acc = 0.0;
  for (int e = 0; e < h.space->mesh->num_elements(); ++e)
    acc += h.space->geom[e].qw.dot(
        h.vals[e].array().square().matrix().rowwise().sum());
  return std::sqrt(acc);
}

DGField lift_r_edge(const LiftingAssembly& a, int edge,
                    const Eigen::MatrixXd& phi) {
  const Edge& ed = a.host->mesh->edges[edge];
  const LiftingAssembly::EdgeCore& c = a.cores[edge];
  DGField out(*a.aux1, 4);
  if (!c.active) return out;
  for (int i = 0; i < 2; ++i) {
    const Eigen::VectorXd cm = c.r_m * phi.col(i);
    for (int j = 0; j < 2; ++j) {
      const int comp = 2 * i + j;
      out.coeffs.segment(comp * a.aux1->num_dofs() +
                             ed.elem_minus * a.aux1->nloc(),
                         a.aux1->nloc()) += ed.normal[j] * cm;
      if (!ed.is_boundary())
        out.coeffs.segment(comp * a.aux1->num_dofs() +
                               ed.elem_plus * a.aux1->nloc(),
                           a.aux1->nloc()) += ed.normal[j] * (c.r_p * phi.col(i));
    }
  }
  return out;
}

DGField lift_b_edge(const LiftingAssembly& a, int edge,
                    const Eigen::VectorXd& phi) {
  const Edge& ed = a.host->mesh->edges[edge];
  const LiftingAssembly::EdgeCore& c = a.cores[edge];
  DGField out(*a.aux2, 4);
  if (!c.active) return out;
  for (int j = 0; j < 2; ++j) {
    const Eigen::VectorXd cm = c.b_m[j] * phi;
    for (int i = 0; i < 2; ++i) {
      const int comp = 2 * i + j;
      out.coeffs.segment(comp * a.aux2->num_dofs() +
                             ed.elem_minus * a.aux2->nloc(),
                         a.aux2->nloc()) += ed.normal[i] * cm;
      if (!ed.is_boundary())
        out.coeffs.segment(comp * a.aux2->num_dofs() +
                               ed.elem_plus * a.aux2->nloc(),
                           a.aux2->nloc()) += ed.normal[i] * (c.b_p[j] * phi);
    }
  }
  return out;
}

// Shared element-parallel accumulation: every element pulls its own
// contribution from each of its active edges, so the result is independent
// of the thread count.
DGField lift_R(const LiftingAssembly& a, const DGField& v) {
  const Mesh& m = *a.host->mesh;
  DGField out(*a.aux1, 4 * v.comps);
  const int nd = a.aux1->nloc();
  const int ndofs = a.aux1->num_dofs();
  parallel_for(m.num_elements(), [&](int k) {
    for (int le = 0; le < 4; ++le) {
      const int e = m.elem_edges[k][le];
      if (e < 0 || !a.cores[e].active) continue;
      const Edge& ed = m.edges[e];
      const bool minus = ed.elem_minus == k;
      const Eigen::MatrixXd& core = minus ? a.cores[e].r_m : a.cores[e].r_p;
      const EdgeValues ev = edge_values(v, e);
      for (int cc = 0; cc < v.comps; ++cc)
        for (int i = 0; i < 2; ++i) {
          Eigen::VectorXd jump = ev.grad_m.col(2 * cc + i);
          if (!ed.is_boundary()) jump -= ev.grad_p.col(2 * cc + i);
          const Eigen::VectorXd cf = core * jump;
          for (int j = 0; j < 2; ++j)
            out.coeffs.segment((cc * 4 + 2 * i + j) * ndofs + k * nd, nd) +=
                ed.normal[j] * cf;
        }
    }
  });
  return out;
}

DGField lift_B(const LiftingAssembly& a, const DGField& v) {
  const Mesh& m = *a.host->mesh;
  DGField out(*a.aux2, 4 * v.comps);
  const int nd = a.aux2->nloc();
  const int ndofs = a.aux2->num_dofs();
  parallel_for(m.num_elements(), [&](int k) {
    for (int le = 0; le < 4; ++le) {
      const int e = m.elem_edges[k][le];
      if (e < 0 || !a.cores[e].active) continue;
      const Edge& ed = m.edges[e];
      const bool minus = ed.elem_minus == k;
      const auto& bc = minus ? a.cores[e].b_m : a.cores[e].b_p;
      const EdgeValues ev = edge_values(v, e);
      for (int cc = 0; cc < v.comps; ++cc) {
        Eigen::VectorXd jump = ev.val_m.col(cc);
        if (!ed.is_boundary()) jump -= ev.val_p.col(cc);
        for (int j = 0; j < 2; ++j) {
          const Eigen::VectorXd cf = bc[j] * jump;
          for (int i = 0; i < 2; ++i)
            out.coeffs.segment((cc * 4 + 2 * i + j) * ndofs + k * nd, nd) +=
                ed.normal[i] * cf;
        }
      }
    }
  });
  return out;
}

DiscreteHessianField discrete_hessian(const LiftingAssembly& a,
                                      const DGField& v) {
  const DGSpace& s = *a.host;
  const DGField R = lift_R(a, v);
  const DGField B = lift_B(a, v);
  DiscreteHessianField h;
  h.space = &s;
  h.comps = v.comps;
  h.vals.resize(s.mesh->num_elements());
  parallel_for(s.mesh->num_elements(), [&](int k) {
    Eigen::MatrixXd& hv = h.vals[k];
    hv.resize(s.npq(), 4 * v.comps);
    for (int cc = 0; cc < v.comps; ++cc) {
      const Eigen::VectorXd ck = v.elem_coeffs(cc, k);
      hv.col(cc * 4 + 0) = s.geom[k].hxx * ck;
      hv.col(cc * 4 + 1) = s.geom[k].hxy * ck;
      hv.col(cc * 4 + 2) = s.geom[k].hxy * ck;
      hv.col(cc * 4 + 3) = s.geom[k].hyy * ck;
      for (int t = 0; t < 4; ++t) {
        hv.col(cc * 4 + t) -=
            a.aux1->geom[k].val * R.elem_coeffs(cc * 4 + t, k);
        hv.col(cc * 4 + t) +=
            a.aux2->geom[k].val * B.elem_coeffs(cc * 4 + t, k);
      }
    }
  });
  return h;
}

DiscreteHessianField hessian_data_offset(const LiftingAssembly& a, int comps,
                                         const VectorClosure& value,
                                         const VectorClosure& grad) {
  const DGSpace& s = *a.host;
  const Mesh& m = *s.mesh;
  DGField Rd(*a.aux1, 4 * comps), Bd(*a.aux2, 4 * comps);
  for (int be : m.boundary_edges) {
    if (!a.cores[be].active) continue;
    const EdgeTrace& t = s.trace[be];
    const int nqe = s.neq();
    Eigen::MatrixXd gv(nqe, 2 * comps), vv(nqe, comps);
    for (int q = 0; q < nqe; ++q) {
      gv.row(q) = grad(t.qpts(q, 0), t.qpts(q, 1)).transpose();
      vv.row(q) = value(t.qpts(q, 0), t.qpts(q, 1)).transpose();
    }
    for (int cc = 0; cc < comps; ++cc) {
      const DGField re =
          lift_r_edge(a, be, gv.middleCols(2 * cc, 2));
      const DGField bve = lift_b_edge(a, be, vv.col(cc));
      for (int t4 = 0; t4 < 4; ++t4) {
        Rd.coeffs.segment((cc * 4 + t4) * a.aux1->num_dofs(),
                          a.aux1->num_dofs()) += re.component(t4);
        Bd.coeffs.segment((cc * 4 + t4) * a.aux2->num_dofs(),
                          a.aux2->num_dofs()) += bve.component(t4);
      }
    }
  }
  DiscreteHessianField h;
  h.space = &s;
  h.comps = comps;
  h.vals.resize(m.num_elements());
  parallel_for(m.num_elements(), [&](int k) {
    Eigen::MatrixXd& hv = h.vals[k];
    hv.resize(s.npq(), 4 * comps);
    for (int c4 = 0; c4 < 4 * comps; ++c4)
      hv.col(c4) = a.aux1->geom[k].val * Rd.elem_coeffs(c4, k) -
                   a.aux2->geom[k].val * Bd.elem_coeffs(c4, k);
  });
  return h;
}

std::vector<ElementHessOp> hessian_ops(const LiftingAssembly& a) {
  const DGSpace& s = *a.host;
  const Mesh& m = *s.mesh;
  const int nd = s.nloc();
  const int nq = s.npq();
  std::vector<ElementHessOp> ops(m.num_elements());
  parallel_for(m.num_elements(), [&](int k) {
    ElementHessOp& o = ops[k];
    o.patch.push_back(k);
    for (int le = 0; le < 4; ++le) {
      const int e = m.elem_edges[k][le];
      if (e < 0 || !a.cores[e].active) continue;
      const Edge& ed = m.edges[e];
      const int nb = ed.elem_minus == k ? ed.elem_plus : ed.elem_minus;
      if (nb >= 0) o.patch.push_back(nb);
    }
    o.op = Eigen::MatrixXd::Zero(4 * nq, nd * o.patch.size());
    for (int q = 0; q < nq; ++q) {
      o.op.block(q * 4 + 0, 0, 1, nd) = s.geom[k].hxx.row(q);
      o.op.block(q * 4 + 1, 0, 1, nd) = s.geom[k].hxy.row(q);
      o.op.block(q * 4 + 2, 0, 1, nd) = s.geom[k].hxy.row(q);
      o.op.block(q * 4 + 3, 0, 1, nd) = s.geom[k].hyy.row(q);
    }
    int slot = 1;
    for (int le = 0; le < 4; ++le) {
      const int e = m.elem_edges[k][le];
      if (e < 0 || !a.cores[e].active) continue;
      const Edge& ed = m.edges[e];
      const bool minus = ed.elem_minus == k;
      const bool interior = !ed.is_boundary();
      const int col_nb = interior ? nd * slot++ : -1;
      const int col_m = minus ? 0 : col_nb;  // column block of the minus elem
      const int col_p = minus ? col_nb : 0;
      // edge data values -> H values at element points, through k's core
      const Eigen::MatrixXd Ar =
          a.aux1->geom[k].val * (minus ? a.cores[e].r_m : a.cores[e].r_p);
      const Eigen::MatrixXd Ab[2] = {
          a.aux2->geom[k].val * (minus ? a.cores[e].b_m[0] : a.cores[e].b_p[0]),
          a.aux2->geom[k].val *
              (minus ? a.cores[e].b_m[1] : a.cores[e].b_p[1])};
      const EdgeTrace& t = s.trace[e];
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          const Eigen::MatrixXd Cm =
              -ed.normal[j] * (Ar * (i == 0 ? t.dx_m : t.dy_m)) +
              ed.normal[i] * (Ab[j] * t.val_m);
          for (int q = 0; q < nq; ++q)
            o.op.block(q * 4 + 2 * i + j, col_m, 1, nd) += Cm.row(q);
          if (interior) {
            const Eigen::MatrixXd Cp =
                ed.normal[j] * (Ar * (i == 0 ? t.dx_p : t.dy_p)) -
                ed.normal[i] * (Ab[j] * t.val_p);
            for (int q = 0; q < nq; ++q)
              o.op.block(q * 4 + 2 * i + j, col_p, 1, nd) += Cp.row(q);
          }
        }
    }
  });
  return ops;
}

EquivalenceReport seminorm_equivalence_check(const LiftingAssembly& a,
                                             double gamma0, double gamma1,
                                             int samples, std::uint64_t seed) {
  const DGSpace& s = *a.host;
  const Mesh& m = *s.mesh;
  Rng rng(seed);
  EquivalenceReport rep;
  rep.c_lower = std::numeric_limits<double>::infinity();
  rep.c_upper = 0.0;
  for (int it = 0; it < samples; ++it) {
    const DGField v = random_field(s, 1, rng);
    double hess2 = 0.0;
    for (int k = 0; k < m.num_elements(); ++k) {
      const Eigen::VectorXd ck = v.elem_coeffs(0, k);
      const Eigen::VectorXd xx = s.geom[k].hxx * ck;
      const Eigen::VectorXd xy = s.geom[k].hxy * ck;
      const Eigen::VectorXd yy = s.geom[k].hyy * ck;
      hess2 += s.geom[k].qw.dot((xx.array().square() +
                                 2.0 * xy.array().square() +
                                 yy.array().square())
                                    .matrix());
    }
    double jg2 = 0.0, jv2 = 0.0;
    for (int e = 0; e < m.num_edges(); ++e) {
      if (!a.cores[e].active) continue;
      const Edge& ed = m.edges[e];
      const EdgeValues ev = edge_values(v, e);
      Eigen::VectorXd jv = ev.val_m.col(0);
      Eigen::MatrixXd jg = ev.grad_m;
      if (!ed.is_boundary()) {
        jv -= ev.val_p.col(0);
        jg -= ev.grad_p;
      }
      const Eigen::VectorXd& w = s.trace[e].qw;
      jv2 += std::pow(ed.length, -3) * w.dot(jv.cwiseAbs2());
      jg2 += (w.dot(jg.col(0).cwiseAbs2()) + w.dot(jg.col(1).cwiseAbs2())) /
             ed.length;
    }
    const double den = hess2 + jg2 + jv2;
    if (den <= 0.0) continue;
    const DiscreteHessianField hh = discrete_hessian(a, v);
    const double nh = l2_norm(hh);
    const double ratio = (nh * nh + gamma1 * jg2 + gamma0 * jv2) / den;
    rep.c_lower = std::min(rep.c_lower, ratio);
    rep.c_upper = std::max(rep.c_upper, ratio);
  }
  return rep;
}

}  // namespace ldg
