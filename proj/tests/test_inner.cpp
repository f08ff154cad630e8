#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "ldg/common.hpp"
#include "ldg/inner.hpp"
#include "ldg/reference.hpp"

using namespace ldg;

TEST_CASE("constants: semi = 0, full = area * c^2") {
  const Mesh m = Mesh::structured(CellKind::Tri, 2, 3, 0, 0, 2, 1);
  const DGSpace s(m, 2);
  const DGField c = interpolate_scalar(s, [](double, double) { return 3.0; });
  CHECK(h2_inner(c, c, H2Mode::Semi) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(h2_inner(c, c, H2Mode::Full) ==
        doctest::Approx(2.0 * 9.0).epsilon(1e-12));
}

TEST_CASE("x1^2 on a single element: semi = 4*area") {
  const Mesh m = Mesh::structured(CellKind::Quad, 1, 1, 0, 0, 1, 1);
  const DGSpace s(m, 2);
  const DGField f =
      interpolate_scalar(s, [](double x, double) { return x * x; });
  CHECK(h2_inner(f, f, H2Mode::Semi) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("symmetry and independent brute-force oracle on random fields") {
  const Mesh m = Mesh::structured(CellKind::Tri, 2, 2, 0, 0, 1, 1);
  const DGSpace s(m, 2);
  Rng rng(7);
  for (int trial = 0; trial < 4; ++trial) {
    const DGField u = random_field(s, 1, rng);
    const DGField v = random_field(s, 1, rng);
    for (H2Mode mode : {H2Mode::Semi, H2Mode::Full}) {
      const double uv = h2_inner(u, v, mode);
      const double vu = h2_inner(v, u, mode);
      CHECK(uv == doctest::Approx(vu).epsilon(1e-12));
      CHECK(uv == doctest::Approx(ref::h2_inner(u, v, mode)).epsilon(1e-11));
    }
  }
}

TEST_CASE("vector fields sum componentwise") {
  const Mesh m = Mesh::structured(CellKind::Quad, 2, 2, 0, 0, 1, 1);
  const DGSpace s(m, 2);
  Rng rng(3);
  const DGField u = random_field(s, 3, rng);
  double parts = 0.0;
  for (int c = 0; c < 3; ++c) {
    DGField uc(s, 1);
    uc.coeffs = u.component(c);
    parts += h2_inner(uc, uc, H2Mode::Full);
  }
  CHECK(h2_inner(u, u, H2Mode::Full) == doctest::Approx(parts).epsilon(1e-12));
}

TEST_CASE("gram matrices match direct evaluations") {
  const Mesh m = Mesh::structured(CellKind::Tri, 2, 2, 0, 0, 1, 1);
  const DGSpace s(m, 2);
  const auto M = gram_mass(s);
  const auto G = gram_grad(s);
  const auto Ssemi = gram_h2(s, H2Mode::Semi, Skeleton::Interior);
  const auto Sfull = gram_h2(s, H2Mode::Full, Skeleton::Interior);
  Rng rng(11);
  for (int t = 0; t < 3; ++t) {
    const DGField u = random_field(s, 1, rng);
    const Eigen::VectorXd a = u.coeffs;
    CHECK(a.dot(M * a) == doctest::Approx(l2_norm(u) * l2_norm(u)).epsilon(1e-11));
    CHECK(a.dot(G * a) ==
          doctest::Approx(broken_grad_norm(u) * broken_grad_norm(u))
              .epsilon(1e-11));
    CHECK(a.dot(Ssemi * a) ==
          doctest::Approx(h2_inner(u, u, H2Mode::Semi)).epsilon(1e-11));
    CHECK(a.dot(Sfull * a) ==
          doctest::Approx(h2_inner(u, u, H2Mode::Full)).epsilon(1e-11));
  }
}

TEST_CASE("full gram is SPD; semi kernel is the affine functions") {
  const Mesh m = Mesh::structured(CellKind::Tri, 2, 2, 0, 0, 1, 1);
  const DGSpace s(m, 2);
  const Eigen::MatrixXd Sfull =
      Eigen::MatrixXd(gram_h2(s, H2Mode::Full, Skeleton::Interior));
  const Eigen::MatrixXd Ssemi =
      Eigen::MatrixXd(gram_h2(s, H2Mode::Semi, Skeleton::Interior));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ef(Sfull);
  CHECK(ef.eigenvalues().minCoeff() > 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ssemi);
  const double scale = es.eigenvalues().maxCoeff();
  int nzero = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] < 1e-10 * scale) nzero++;
  // kernel = globally affine fields: zero broken Hessian plus zero value and
  // gradient jumps force v in P1, so the kernel has dimension 3
  CHECK(nzero == 3);
  for (int kv = 0; kv < 3; ++kv) {
    DGField k(s, 1);
    k.coeffs = es.eigenvectors().col(kv);
    // least-squares affine fit over quadrature points reproduces the field
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    Eigen::Vector3d b = Eigen::Vector3d::Zero();
    for (int e = 0; e < m.num_elements(); ++e) {
      const ElemGeom& g = s.geom[e];
      const Eigen::VectorXd vals = g.val * k.elem_coeffs(0, e);
      for (int q = 0; q < s.npq(); ++q) {
        const Eigen::Vector3d p(1.0, g.qpts(q, 0), g.qpts(q, 1));
        A += g.qw[q] * p * p.transpose();
        b += g.qw[q] * vals[q] * p;
      }
    }
    const Eigen::Vector3d cfit = A.ldlt().solve(b);
    double dev = 0.0;
    for (int e = 0; e < m.num_elements(); ++e) {
      const ElemGeom& g = s.geom[e];
      const Eigen::VectorXd vals = g.val * k.elem_coeffs(0, e);
      for (int q = 0; q < s.npq(); ++q) {
        const double fit =
            cfit[0] + cfit[1] * g.qpts(q, 0) + cfit[2] * g.qpts(q, 1);
        dev += g.qw[q] * (vals[q] - fit) * (vals[q] - fit);
      }
    }
    CHECK(std::sqrt(dev) < 1e-9);
  }
}

TEST_CASE("jump/average product identity at edge quadrature points") {
  const Mesh m = Mesh::structured(CellKind::Quad, 2, 2, 0, 0, 1, 1);
  const DGSpace s(m, 2);
  Rng rng(5);
  const DGField u = random_field(s, 1, rng);
  const DGField v = random_field(s, 1, rng);
  for (int ie : m.interior_edges) {
    const EdgeValues eu = edge_values(u, ie);
    const EdgeValues ev = edge_values(v, ie);
    for (int q = 0; q < s.neq(); ++q) {
      const double um = eu.val_m(q, 0), up = eu.val_p(q, 0);
      const double vm = ev.val_m(q, 0), vp = ev.val_p(q, 0);
      const double lhs = um * vm - up * vp;                    // [uv]
      const double rhs = (um - up) * 0.5 * (vm + vp) +         // [u]{v}
                         0.5 * (um + up) * (vm - vp);          // {u}[v]
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("poincare ratio for the linear field x1") {
  const Mesh m = Mesh::structured(CellKind::Tri, 3, 3, 0, 0, 1, 1);
  const DGSpace s(m, 2);
  const DGField v = interpolate_scalar(s, [](double x, double) { return x; });
  const double mean = integral(v)[0];
  CHECK(mean == doctest::Approx(0.5).epsilon(1e-13));
  // ||x1 - 1/2|| = 1/sqrt(12), ||grad|| = 1, no jumps
  const double num = std::sqrt(1.0 / 12.0);
  CHECK(broken_grad_norm(v) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(jump_value_norm(v, -0.5) < 1e-12);
  double dev = 0.0;
  for (int e = 0; e < m.num_elements(); ++e) {
    const Eigen::VectorXd vals =
        (s.geom[e].val * v.elem_coeffs(0, e)).array() - 0.5;
    dev += s.geom[e].qw.dot(vals.cwiseAbs2());
  }
  CHECK(std::sqrt(dev) == doctest::Approx(num).epsilon(1e-12));
}

TEST_CASE("inequality ratios stay bounded across refinement") {
  Mesh m = Mesh::structured(CellKind::Tri, 2, 2, 0, 0, 1, 1);
  std::vector<InequalityReport> reps;
  for (int lvl = 0; lvl < 3; ++lvl) {
    const DGSpace s(m, 2);
    reps.push_back(functional_inequality_check(s, 100, 42));
    if (lvl < 2) m = m.refined();
  }
  for (int i = 0; i + 1 < 3; ++i) {
    CHECK(reps[i + 1].poincare_ratio_max <
          1.5 * std::max(reps[i].poincare_ratio_max, 1e-30));
    CHECK(reps[i + 1].sobolev_ratio_max < 1.5 * reps[i].sobolev_ratio_max);
    CHECK(reps[i + 1].grad_bound_ratio_max <
          1.5 * reps[i].grad_bound_ratio_max);
  }
}
