#include "ldg/inner.hpp"

#include <cmath>
#include <vector>

#include "ldg/common.hpp"

namespace ldg {

namespace {

void check_match(const DGField& u, const DGField& v) {
  if (u.space != v.space || u.comps != v.comps)
    throw Error("h2_inner: fields from different spaces or component counts");
}

}  // namespace

double h2_inner(const DGField& u, const DGField& v, H2Mode mode) {
  check_match(u, v);
  const DGSpace& s = *u.space;
  const int ne = s.mesh->num_elements();

  std::vector<double> part(ne, 0.0);
  parallel_for(ne, [&](int e) {
    const ElemGeom& g = s.geom[e];
    double acc = 0.0;
    for (int c = 0; c < u.comps; ++c) {
      const Eigen::VectorXd a = u.elem_coeffs(c, e), b = v.elem_coeffs(c, e);
      acc += g.qw.dot((g.hxx * a).cwiseProduct(g.hxx * b) +
                      2.0 * (g.hxy * a).cwiseProduct(g.hxy * b) +
                      (g.hyy * a).cwiseProduct(g.hyy * b));
      if (mode == H2Mode::Full)
        acc += g.qw.dot((g.val * a).cwiseProduct(g.val * b));
    }
    part[e] = acc;
  });
  double sum = 0.0;
  for (double p : part) sum += p;

  for (int ie : s.mesh->interior_edges) {
    const Edge& ed = s.mesh->edges[ie];
    const EdgeTrace& t = s.trace[ie];
    const double w1 = 1.0 / ed.length;
    const double w3 = w1 * w1 * w1;
    for (int c = 0; c < u.comps; ++c) {
      const Eigen::VectorXd am = u.elem_coeffs(c, ed.elem_minus),
                            ap = u.elem_coeffs(c, ed.elem_plus),
                            bm = v.elem_coeffs(c, ed.elem_minus),
                            bp = v.elem_coeffs(c, ed.elem_plus);
      sum += w1 * t.qw.dot((t.dx_m * am - t.dx_p * ap)
                               .cwiseProduct(t.dx_m * bm - t.dx_p * bp) +
                           (t.dy_m * am - t.dy_p * ap)
                               .cwiseProduct(t.dy_m * bm - t.dy_p * bp));
      sum += w3 * t.qw.dot((t.val_m * am - t.val_p * ap)
                               .cwiseProduct(t.val_m * bm - t.val_p * bp));
    }
  }
  return sum;
}

double h2_semi_norm(const DGField& u) {
  return std::sqrt(std::max(0.0, h2_inner(u, u, H2Mode::Semi)));
}

double h2_norm(const DGField& u) {
  return std::sqrt(std::max(0.0, h2_inner(u, u, H2Mode::Full)));
}

namespace {

using Triplet = Eigen::Triplet<double>;

void scatter_block(std::vector<Triplet>& out, const Eigen::MatrixXd& blk,
                   int row0, int col0) {
  for (int i = 0; i < blk.rows(); ++i)
    for (int j = 0; j < blk.cols(); ++j)
      if (blk(i, j) != 0.0) out.emplace_back(row0 + i, col0 + j, blk(i, j));
}

Eigen::SparseMatrix<double> from_triplets(int n,
                                          const std::vector<Triplet>& tri) {
  Eigen::SparseMatrix<double> M(n, n);
  M.setFromTriplets(tri.begin(), tri.end());
  return M;
}

}  // namespace

Eigen::SparseMatrix<double> gram_mass(const DGSpace& s) {
  const int ne = s.mesh->num_elements(), nl = s.nloc();
  std::vector<Eigen::MatrixXd> blocks(ne);
  parallel_for(ne, [&](int e) {
    const ElemGeom& g = s.geom[e];
    blocks[e] = g.val.transpose() * g.qw.asDiagonal() * g.val;
  });
  std::vector<Triplet> tri;
  tri.reserve(static_cast<size_t>(ne) * nl * nl);
  for (int e = 0; e < ne; ++e) scatter_block(tri, blocks[e], e * nl, e * nl);
  return from_triplets(s.num_dofs(), tri);
}

Eigen::SparseMatrix<double> gram_grad(const DGSpace& s) {
  const int ne = s.mesh->num_elements(), nl = s.nloc();
  std::vector<Eigen::MatrixXd> blocks(ne);
  parallel_for(ne, [&](int e) {
    const ElemGeom& g = s.geom[e];
    blocks[e] = g.dx.transpose() * g.qw.asDiagonal() * g.dx +
                g.dy.transpose() * g.qw.asDiagonal() * g.dy;
  });
  std::vector<Triplet> tri;
  tri.reserve(static_cast<size_t>(ne) * nl * nl);
  for (int e = 0; e < ne; ++e) scatter_block(tri, blocks[e], e * nl, e * nl);
  return from_triplets(s.num_dofs(), tri);
}

Eigen::SparseMatrix<double> gram_h2(const DGSpace& s, H2Mode mode,
                                    Skeleton skel) {
  const int ne = s.mesh->num_elements(), nl = s.nloc();
  std::vector<Eigen::MatrixXd> blocks(ne);
  parallel_for(ne, [&](int e) {
    const ElemGeom& g = s.geom[e];
    Eigen::MatrixXd B = g.hxx.transpose() * g.qw.asDiagonal() * g.hxx +
                        2.0 * g.hxy.transpose() * g.qw.asDiagonal() * g.hxy +
                        g.hyy.transpose() * g.qw.asDiagonal() * g.hyy;
    if (mode == H2Mode::Full)
      B += g.val.transpose() * g.qw.asDiagonal() * g.val;
    blocks[e] = B;
  });

  std::vector<Triplet> tri;
  for (int e = 0; e < ne; ++e) scatter_block(tri, blocks[e], e * nl, e * nl);

  auto add_edge = [&](int ie) {
    const Edge& ed = s.mesh->edges[ie];
    const EdgeTrace& t = s.trace[ie];
    const double w1 = 1.0 / ed.length;
    const double w3 = w1 * w1 * w1;
    if (ed.is_boundary()) {
      const Eigen::MatrixXd B =
          w1 * (t.dx_m.transpose() * t.qw.asDiagonal() * t.dx_m +
                t.dy_m.transpose() * t.qw.asDiagonal() * t.dy_m) +
          w3 * (t.val_m.transpose() * t.qw.asDiagonal() * t.val_m);
      scatter_block(tri, B, ed.elem_minus * nl, ed.elem_minus * nl);
      return;
    }
    Eigen::MatrixXd Jv(s.neq(), 2 * nl), Jx(s.neq(), 2 * nl),
        Jy(s.neq(), 2 * nl);
    Jv << t.val_m, -t.val_p;
    Jx << t.dx_m, -t.dx_p;
    Jy << t.dy_m, -t.dy_p;
    const Eigen::MatrixXd B =
        w1 * (Jx.transpose() * t.qw.asDiagonal() * Jx +
              Jy.transpose() * t.qw.asDiagonal() * Jy) +
        w3 * (Jv.transpose() * t.qw.asDiagonal() * Jv);
    const int rm = ed.elem_minus * nl, rp = ed.elem_plus * nl;
    scatter_block(tri, B.topLeftCorner(nl, nl), rm, rm);
    scatter_block(tri, B.topRightCorner(nl, nl), rm, rp);
    scatter_block(tri, B.bottomLeftCorner(nl, nl), rp, rm);
    scatter_block(tri, B.bottomRightCorner(nl, nl), rp, rp);
  };

  for (int ie : s.mesh->interior_edges) add_edge(ie);
  if (skel == Skeleton::Active)
    for (int ie : s.mesh->boundary_edges)
      if (s.mesh->edges[ie].label == BoundaryLabel::Dirichlet) add_edge(ie);

  return from_triplets(s.num_dofs(), tri);
}

InequalityReport functional_inequality_check(const DGSpace& s, int samples,
                                             std::uint64_t seed) {
  if (samples < 1) throw Error("functional_inequality_check: samples >= 1");
  Rng rng(seed);
  InequalityReport rep;
  const double area = s.mesh->domain_area();
  for (int k = 0; k < samples; ++k) {
    const DGField v = random_field(s, 1, rng);
    const double mean = integral(v)[0] / area;
    double dev = 0.0;
    for (int e = 0; e < s.mesh->num_elements(); ++e) {
      const ElemGeom& g = s.geom[e];
      const Eigen::VectorXd vals =
          (g.val * v.elem_coeffs(0, e)).array() - mean;
      dev += g.qw.dot(vals.cwiseAbs2());
    }
    dev = std::sqrt(dev);
    const double gn = broken_grad_norm(v);
    const double jv = jump_value_norm(v, -0.5);
    const double l2 = l2_norm(v);
    const double l4 = l4_norm(v);
    const double semi = h2_semi_norm(v);
    rep.poincare_ratio_max =
        std::max(rep.poincare_ratio_max, dev / (gn + jv));
    rep.sobolev_ratio_max =
        std::max(rep.sobolev_ratio_max, l4 / (gn + jv + l2));
    rep.grad_bound_ratio_max =
        std::max(rep.grad_bound_ratio_max, gn / (l2 + semi));
  }
  return rep;
}

}  // namespace ldg
