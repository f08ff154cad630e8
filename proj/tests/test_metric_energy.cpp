#include <cmath>

#include "doctest.h"
#include "ldg/common.hpp"
#include "ldg/energy.hpp"
#include "ldg/inner.hpp"

using namespace ldg;

namespace {

constexpr double kPi = 3.14159265358979323846;

EnergyParams free_params(MetricField g, double mu = 3.0, double la = 0.0,
                         double g0 = 1.0, double g1 = 1.0) {
  EnergyParams p;
  p.mu = mu;
  p.lambda = la;
  p.gamma0 = g0;
  p.gamma1 = g1;
  p.mode = BoundaryMode::Free;
  p.metric = std::move(g);
  return p;
}

DGField immersion_interpolant(const DGSpace& s, const MetricField& g) {
  return interpolate(s, 3, [&](double x, double y) {
    return Eigen::VectorXd(g.immersion(x, y));
  });
}

DGField shifted(const DGField& y, const Eigen::Vector3d& c) {
  DGField out = y;
  const int n = y.space->num_dofs();
  for (int m = 0; m < 3; ++m)
    out.coeffs.segment(m * n, n).array() += c(m);  // nodal basis
  return out;
}

DGField rotated(const DGField& y, const Eigen::Matrix3d& r) {
  DGField out = y;
  const int n = y.space->num_dofs();
  out.coeffs.setZero();
  for (int m = 0; m < 3; ++m)
    for (int c = 0; c < 3; ++c)
      out.coeffs.segment(m * n, n) += r(m, c) * y.coeffs.segment(c * n, n);
  return out;
}

// pointwise L1 norm of the constraint residual, independent quadrature loop
double residual_l1(const DGField& y, const MetricField& g) {
  const DGSpace& s = *y.space;
  double acc = 0.0;
  for (int k = 0; k < s.mesh->num_elements(); ++k) {
    const ElemGeom& eg = s.geom[k];
    Eigen::MatrixXd dx(eg.qpts.rows(), 3), dy(eg.qpts.rows(), 3);
    for (int c = 0; c < 3; ++c) {
      dx.col(c) = eg.dx * y.elem_coeffs(c, k);
      dy.col(c) = eg.dy * y.elem_coeffs(c, k);
    }
    for (int q = 0; q < eg.qpts.rows(); ++q) {
      Eigen::Matrix2d r;
      r(0, 0) = dx.row(q).squaredNorm();
      r(1, 1) = dy.row(q).squaredNorm();
      r(0, 1) = r(1, 0) = dx.row(q).dot(dy.row(q));
      acc += eg.qw(q) * (r - g.at(eg.qpts(q, 0), eg.qpts(q, 1))).norm();
    }
  }
  return acc;
}

// forcing functional (f, v) by independent quadrature
double forcing_dot(const VectorClosure& f, const DGField& v) {
  const DGSpace& s = *v.space;
  double acc = 0.0;
  for (int k = 0; k < s.mesh->num_elements(); ++k) {
    const ElemGeom& eg = s.geom[k];
    Eigen::MatrixXd vv(eg.qpts.rows(), 3);
    for (int c = 0; c < 3; ++c) vv.col(c) = eg.val * v.elem_coeffs(c, k);
    for (int q = 0; q < eg.qpts.rows(); ++q)
      acc += eg.qw(q) *
             f(eg.qpts(q, 0), eg.qpts(q, 1)).dot(vv.row(q).transpose());
  }
  return acc;
}

MetricField catenoid_like() {
  MetricField m;
  m.g = [](double x, double) {
    Eigen::Matrix2d g = Eigen::Matrix2d::Identity();
    g(0, 0) = 1.0 + x * x;
    return g;
  };
  m.immersion = [](double x, double y) {
    return Eigen::Vector3d(x, y, 0.5 * x * x);
  };
  m.immersion_grad = [](double x, double) {
    Matrix32d d;
    d << 1, 0, 0, 1, x, 0;
    return d;
  };
  m.immersion_hess = [](double, double) {
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    h(2, 0) = 1.0;
    return h;
  };
  return m;
}

VectorClosure zero_mean_forcing() {
  return [](double x, double y) {
    return Eigen::VectorXd(Eigen::Vector3d(x - 0.5, 0.2 * (y - 0.5),
                                           x * y - 0.25));
  };
}

}  // namespace

TEST_CASE("spd square root: closed form matches the eigendecomposition") {
  std::vector<Eigen::Matrix2d> samples;
  Eigen::Matrix2d a;
  a << 4, 1, 1, 3;
  samples.push_back(a);
  a << 2, 0, 0, 2;
  samples.push_back(a);
  a << 1, 0.999, 0.999, 1;  // nearly rank deficient
  samples.push_back(a);
  a << 1e4, 12, 12, 0.1;  // strongly anisotropic
  samples.push_back(a);

  for (const Eigen::Matrix2d& m : samples) {
    const Eigen::Matrix2d s = spd_sqrt(m);
    CHECK((s * s - m).norm() <= 1e-12 * m.norm());
    CHECK(std::abs(s(0, 1) - s(1, 0)) <= 1e-14 * s.norm());

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
    const Eigen::Matrix2d ref = es.eigenvectors() *
                                es.eigenvalues().cwiseSqrt().asDiagonal() *
                                es.eigenvectors().transpose();
    CHECK((s - ref).norm() <= 1e-12 * ref.norm());

    const Eigen::Matrix2d gi = spd_inv_sqrt(m);
    CHECK((gi * gi * m - Eigen::Matrix2d::Identity()).norm() <= 1e-12);
  }

  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1;  // det < 0
  CHECK_THROWS_AS(spd_sqrt(bad), Error);
  bad << -1, 0, 0, 1;
  CHECK_THROWS_AS(spd_inv_sqrt(bad), Error);
}

TEST_CASE("metric catalog: SPD checks and L1 norms") {
  const Mesh m = Mesh::structured(CellKind::Quad, 8, 8, 0, 0, 1, 1);
  const DGSpace s(m, 2);

  const MetricField id = metric_identity();
  CHECK((id.at(0.3, 0.7) - Eigen::Matrix2d::Identity()).norm() == 0.0);
  CHECK(id.has_immersion());
  check_metric_spd(id, s);
  CHECK(metric_l1_norm(id, s) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));

  const MetricField cyl = metric_cylinder();
  check_metric_spd(cyl, s);
  const Matrix32d dy = cyl.immersion_grad(0.4, 0.8);
  CHECK((dy.transpose() * dy - Eigen::Matrix2d::Identity()).norm() <= 1e-14);

  const MetricField st = metric_stretched(2.0);
  CHECK(!st.has_immersion());
  check_metric_spd(st, s);
  // int_0^1 sqrt((1+2 y^2)^2 + 1) dy, Gauss-Legendre n=200
  CHECK(metric_l1_norm(st, s) ==
        doctest::Approx(1.9664233795551183).epsilon(1e-9));

  const MetricField bad =
      metric_custom([](double x, double) {
        Eigen::Matrix2d g = Eigen::Matrix2d::Identity();
        g(0, 0) = x - 0.5;  // negative on the left half
        return g;
      });
  CHECK_THROWS_WITH_AS(check_metric_spd(bad, s),
                       doctest::Contains("not SPD at point"), Error);
}

TEST_CASE("flat state: energy, defect, and preprocessing all vanish") {
  const Mesh m = Mesh::structured(CellKind::Quad, 4, 4, 0, 0, 1, 1);
  const DGSpace s(m, 2);
  const LiftingAssembly a(s, 2, 2);
  const MetricField id = metric_identity();
  const DGField y = immersion_interpolant(s, id);

  const EnergyBreakdown b = energy_Eh(free_params(metric_identity()), a, y);
  CHECK(std::abs(b.total) <= 1e-18);
  CHECK(std::abs(b.frobenius) <= 1e-18);
  CHECK(std::abs(b.grad_jump) <= 1e-18);
  CHECK(std::abs(b.value_jump) <= 1e-18);
  CHECK(metric_defect(y, id) <= 1e-13);

  const PreEnergies pe = energy_preprocess(0.5, id, a, y);
  CHECK(pe.stretching <= 1e-20);
  CHECK(pe.bending <= 1e-18);
  CHECK(pe.total <= 1e-18);
}

TEST_CASE("uniform stretch: frozen defect and stretching energy") {
  const MetricField id = metric_identity();
  const VectorClosure stretch = [](double x, double y) {
    return Eigen::VectorXd(Eigen::Vector3d(2.0 * x, y, 0.0));
  };
  for (CellKind kind : {CellKind::Quad, CellKind::Tri}) {
    const Mesh m = Mesh::structured(kind, 4, 4, 0, 0, 1, 1);
    const DGSpace s(m, 2);
    const LiftingAssembly a(s, 2, 2);
    const DGField y = interpolate(s, 3, stretch);

    // residual diag(3, 0) per element: defect 3 |T| each, total 3
    CHECK(metric_defect(y, id) == doctest::Approx(3.0).epsilon(1e-13));
    // E_s = 0.5 * 9 * |Omega|
    const PreEnergies pe = energy_preprocess(0.0, id, a, y);
    CHECK(pe.stretching == doctest::Approx(4.5).epsilon(1e-13));
    CHECK(pe.total == pe.stretching);  // sigma_h = 0

    // constant residual: the defect chain holds with equality
    const double l1 = residual_l1(y, id);
    const double bound = std::sqrt(m.domain_area()) *
                         std::sqrt(2.0 * pe.stretching);
    CHECK(metric_defect(y, id) == doctest::Approx(l1).epsilon(1e-12));
    CHECK(l1 == doctest::Approx(bound).epsilon(1e-12));
  }
}

TEST_CASE("cylinder interpolant: energy approaches the analytic limit") {
  // exact immersion has sum_m |D2 y_m|^2 = sum_m tr(D2 y_m)^2 = 1, so
  // E = (mu/12)(1 + lambda/(2 mu + lambda)) |Omega| with |Omega| = pi
  const MetricField cyl = metric_cylinder();
  for (double lambda : {0.0, 2.0}) {
    const double mu = 3.0;
    const double limit =
        mu / 12.0 * (1.0 + lambda / (2.0 * mu + lambda)) * kPi;
    std::vector<double> errs;
    for (int n : {4, 8, 16}) {
      const Mesh m = Mesh::structured(CellKind::Quad, n, n / 2, 0, 0, kPi, 1);
      const DGSpace s(m, 2);
      const LiftingAssembly a(s, 2, 2);
      const DGField y = immersion_interpolant(s, cyl);
      const EnergyBreakdown b =
          energy_Eh(free_params(metric_cylinder(), mu, lambda), a, y);
      errs.push_back(std::abs(b.total - limit));
    }
    CHECK(errs[1] < errs[0]);
    CHECK(errs[2] < errs[1]);
    CHECK(errs[2] <= 0.01 * limit);
  }
}

TEST_CASE("metric defect of the interpolated immersion decays at first order") {
  const MetricField cyl = metric_cylinder();
  std::vector<double> d;
  for (int n : {4, 8, 16}) {
    const Mesh m = Mesh::structured(CellKind::Tri, n, n / 2, 0, 0, kPi, 1);
    const DGSpace s(m, 2);
    d.push_back(metric_defect(immersion_interpolant(s, cyl), cyl));
  }
  MESSAGE("cylinder interpolant defect: " << d[0] << " " << d[1] << " "
                                          << d[2]);
  for (int i = 0; i + 1 < 3; ++i)
    CHECK(std::log2(d[i] / d[i + 1]) >= 0.9);
}

TEST_CASE("energy identities: quadratic form, symmetry, invariances") {
  const Mesh m = Mesh::structured(CellKind::Quad, 3, 3, 0, 0, 1, 1);
  const DGSpace s(m, 2);
  const LiftingAssembly a(s, 2, 2);
  const EnergyParams p = free_params(metric_stretched(0.7), 2.5, 1.5, 2.0, 0.3);
  Rng rng(7);
  const DGField y = random_field(s, 3, rng);
  const DGField v = random_field(s, 3, rng);

  const EnergyBreakdown b = energy_Eh(p, a, y);
  CHECK(b.total ==
        doctest::Approx(b.frobenius + b.trace + b.grad_jump + b.value_jump +
                        b.forcing));
  CHECK(form_ah(p, a, y, y) == doctest::Approx(2.0 * b.total).epsilon(1e-12));
  CHECK(form_ah(p, a, y, v) ==
        doctest::Approx(form_ah(p, a, v, y)).epsilon(1e-12));

  const DGField ys = shifted(y, Eigen::Vector3d(0.3, -0.2, 0.5));
  CHECK(energy_Eh(p, a, ys).total == doctest::Approx(b.total).epsilon(1e-12));

  const MetricField& g = p.metric;
  const double d0 = metric_defect(y, g);
  CHECK(metric_defect(ys, g) == doctest::Approx(d0).epsilon(1e-12));
  const Eigen::Matrix3d r =
      Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized())
          .toRotationMatrix();
  CHECK(metric_defect(rotated(y, r), g) ==
        doctest::Approx(d0).epsilon(1e-12));
}

TEST_CASE("flow form matches central differences of the energy") {
  const Mesh m0 = Mesh::structured(CellKind::Quad, 3, 3, 0, 0, 1, 1);
  const DGSpace s0(m0, 2);
  const LiftingAssembly a0(s0, 2, 2);
  EnergyParams p = free_params(metric_stretched(0.4), 2.0, 1.0);
  p.forcing = zero_mean_forcing();
  Rng rng(11);
  const double eps = 1e-4;

  auto fd_check = [&](const EnergyParams& pp, const LiftingAssembly& aa,
                      const DGField& y, const DGField& v) {
    DGField yp = y, ym = y;
    yp.coeffs += eps * v.coeffs;
    ym.coeffs -= eps * v.coeffs;
    const double fd = (energy_Eh(pp, aa, yp).total -
                       energy_Eh(pp, aa, ym).total) /
                      (2.0 * eps);
    const double lhs =
        form_ah(pp, aa, y, v) + energy_Eh(pp, aa, v).forcing;
    CHECK(std::abs(fd - lhs) <= 1e-7 * std::max(1.0, std::abs(fd)));
  };

  fd_check(p, a0, random_field(s0, 3, rng), random_field(s0, 3, rng));

  // homogeneous Dirichlet data on the active skeleton
  Mesh m1 = Mesh::structured(CellKind::Quad, 3, 3, 0, 0, 1, 1);
  mark_dirichlet_sides(m1, {"left", "bottom"});
  const DGSpace s1(m1, 2);
  const LiftingAssembly a1(s1, 2, 2, Skeleton::Active);
  EnergyParams pd = free_params(metric_identity(), 3.0, 1.0);
  pd.mode = BoundaryMode::Dirichlet;
  fd_check(pd, a1, random_field(s1, 3, rng), random_field(s1, 3, rng));
}

TEST_CASE("assembled flow operator agrees with the direct form") {
  Rng rng(23);

  // free boundary, general metric
  {
    const Mesh m = Mesh::structured(CellKind::Tri, 3, 3, 0, 0, 1, 1);
    const DGSpace s(m, 2);
    const LiftingAssembly a(s, 2, 2);
    const EnergyParams p = free_params(metric_stretched(0.6), 2.0, 1.0, 1.5, 0.5);
    const AhOperator op = assemble_ah(p, a);
    CHECK(op.load.norm() == 0.0);
    CHECK(op.constant == 0.0);
    Eigen::SparseMatrix<double> diff = Eigen::SparseMatrix<double>(op.A.transpose()) - op.A;
    CHECK(diff.norm() <= 1e-12 * op.A.norm());
    for (int t = 0; t < 3; ++t) {
      const DGField y = random_field(s, 3, rng);
      const DGField v = random_field(s, 3, rng);
      CHECK(op.apply(y, v) ==
            doctest::Approx(form_ah(p, a, y, v)).epsilon(1e-12));
    }
  }

  // Dirichlet boundary with polynomial data
  {
    Mesh m = Mesh::structured(CellKind::Quad, 3, 3, 0, 0, 1, 1);
    mark_dirichlet_sides(m, {"left", "bottom"});
    const DGSpace s(m, 2);
    const LiftingAssembly a(s, 2, 2, Skeleton::Active);
    EnergyParams p = free_params(metric_identity(), 3.0, 1.0, 2.0, 0.7);
    p.mode = BoundaryMode::Dirichlet;
    p.bc_value = [](double x, double y) {
      return Eigen::VectorXd(Eigen::Vector3d(x * x + 3.0 * x * y,
                                             y * y - x, 2.0 * x + y));
    };
    p.bc_grad = [](double x, double y) {
      Eigen::VectorXd d(6);
      d << 2.0 * x + 3.0 * y, 3.0 * x, -1.0, 2.0 * y, 2.0, 1.0;
      return d;
    };
    const AhOperator op = assemble_ah(p, a);
    CHECK(op.load.norm() > 0.0);
    CHECK(op.constant > 0.0);
    for (int t = 0; t < 3; ++t) {
      const DGField y = random_field(s, 3, rng);
      const DGField v = random_field(s, 3, rng);
      CHECK(op.apply(y, v) ==
            doctest::Approx(form_ah(p, a, y, v)).epsilon(1e-12));
      CHECK(op.apply(y, y) ==
            doctest::Approx(2.0 * energy_Eh(p, a, y).total).epsilon(1e-12));
    }
  }
}

TEST_CASE("constraint form: hand values, assembly, multiplier gram") {
  const Mesh m = Mesh::structured(CellKind::Quad, 2, 2, 0, 0, 1, 1);
  const DGSpace s(m, 2);
  const int ne = m.num_elements();
  const DGField y = interpolate(s, 3, [](double x, double yy) {
    return Eigen::VectorXd(Eigen::Vector3d(x, yy, 0.0));
  });
  const std::vector<Eigen::Matrix2d> eye(ne, Eigen::Matrix2d::Identity());

  const DGField v1 = interpolate(s, 3, [](double x, double yy) {
    return Eigen::VectorXd(Eigen::Vector3d(x, -yy, 0.0));
  });
  CHECK(std::abs(form_bh(y, v1, eye)) <= 1e-13);
  CHECK(form_bh(y, y, eye) == doctest::Approx(4.0).epsilon(1e-13));

  Rng rng(5);
  std::vector<Eigen::Matrix2d> mult(ne);
  for (Eigen::Matrix2d& mm : mult) {
    const double a11 = rng.normal(), a22 = rng.normal(), a12 = rng.normal();
    mm << a11, a12, a12, a22;
  }
  DGField cst(s, 3);
  cst.coeffs.setConstant(0.8);
  CHECK(std::abs(form_bh(y, cst, mult)) <= 1e-13);

  std::vector<Eigen::Matrix2d> badmult = mult;
  badmult[1](0, 1) += 1.0;
  CHECK_THROWS_WITH_AS(form_bh(y, y, badmult),
                       doctest::Contains("asymmetric"), Error);
  CHECK_THROWS_AS(form_bh(y, y, std::vector<Eigen::Matrix2d>(ne - 1)), Error);

  // assembled rows against the direct form on random data
  const DGField yr = random_field(s, 3, rng);
  const DGField vr = random_field(s, 3, rng);
  const Eigen::SparseMatrix<double> B = assemble_bh(yr);
  const Eigen::VectorXd bv = B * vr.coeffs;
  double viaB = 0.0;
  for (int k = 0; k < ne; ++k)
    viaB += mult[k](0, 0) * bv(3 * k) + mult[k](1, 1) * bv(3 * k + 1) +
            mult[k](0, 1) * bv(3 * k + 2);
  CHECK(viaB == doctest::Approx(form_bh(yr, vr, mult)).epsilon(1e-12));

  // gram of the multiplier space: sum_T |T| mu : eta
  const Eigen::SparseMatrix<double> G = multiplier_gram(m);
  Eigen::VectorXd mu(3 * ne), eta(3 * ne);
  std::vector<Eigen::Matrix2d> mult2(ne);
  for (int k = 0; k < ne; ++k) {
    const double b11 = rng.normal(), b22 = rng.normal(), b12 = rng.normal();
    mult2[k] << b11, b12, b12, b22;
    mu.segment<3>(3 * k) << mult[k](0, 0), mult[k](1, 1), mult[k](0, 1);
    eta.segment<3>(3 * k) << b11, b22, b12;
  }
  double hand = 0.0;
  for (int k = 0; k < ne; ++k)
    hand += m.element_area(k) * mult[k].cwiseProduct(mult2[k]).sum();
  CHECK(mu.dot(G * eta) == doctest::Approx(hand).epsilon(1e-13));
}

TEST_CASE("preprocessing energies and forms") {
  const Mesh m = Mesh::structured(CellKind::Quad, 4, 4, 0, 0, 1, 1);
  const DGSpace s(m, 2);
  const LiftingAssembly a(s, 2, 2);
  const MetricField g = metric_stretched(0.4);
  Rng rng(31);
  const DGField y = random_field(s, 3, rng);
  const DGField u = random_field(s, 3, rng);
  const DGField v = random_field(s, 3, rng);

  // sigma_h = 0 collapses E_p to the stretching part
  const PreEnergies p0 = energy_preprocess(0.0, g, a, y);
  CHECK(p0.total == p0.stretching);

  // quadratic identity of the bending regularizer
  const PreForms f = forms_preprocess(g, a, y, v, v);
  CHECK(f.a_b ==
        doctest::Approx(2.0 * energy_preprocess(1.0, g, a, v).bending)
            .epsilon(1e-12));

  // admissible anchor kills the stretching form
  const MetricField id = metric_identity();
  const DGField flat = immersion_interpolant(s, id);
  CHECK(std::abs(forms_preprocess(id, a, flat, u, v).a_s) <= 1e-12);

  // assembled operators match the direct forms componentwise
  const Eigen::SparseMatrix<double> As = assemble_as(g, y);
  const Eigen::SparseMatrix<double> Ab = assemble_ab(g, a);
  const int n = s.num_dofs();
  double as = 0.0, ab = 0.0;
  for (int c = 0; c < 3; ++c) {
    as += v.coeffs.segment(c * n, n).dot(As * u.coeffs.segment(c * n, n));
    ab += v.coeffs.segment(c * n, n).dot(Ab * u.coeffs.segment(c * n, n));
  }
  const PreForms fuv = forms_preprocess(g, a, y, u, v);
  CHECK(as == doctest::Approx(fuv.a_s).epsilon(1e-12));
  CHECK(ab == doctest::Approx(fuv.a_b).epsilon(1e-12));

  // defect chain D_h <= ||R||_L1 <= sqrt(|Omega|) (2 E_s)^(1/2)
  for (int t = 0; t < 5; ++t) {
    const DGField z = random_field(s, 3, rng, t == 0 ? 1.0 : 0.3);
    const double dh = metric_defect(z, g);
    const double l1 = residual_l1(z, g);
    const double es = energy_preprocess(0.0, g, a, z).stretching;
    CHECK(dh <= l1 + 1e-10);
    CHECK(l1 <= std::sqrt(m.domain_area() * 2.0 * es) + 1e-10);
    // gradient bound from the defect and the metric mass
    const double gn = broken_grad_norm(z);
    CHECK(gn * gn <= std::sqrt(2.0) * (dh + metric_l1_norm(g, s)) + 1e-9);
  }
}

TEST_CASE("continuity constant of the stretching form is stable") {
  // The extremizers are smooth, so the triples are random cubic polynomials
  // interpolated onto each mesh (same seed, hence the same continuum fields)
  // rather than raw coefficient noise, whose ratio degenerates with h.
  auto random_poly = [](Rng& rng, double amp) {
    Eigen::MatrixXd c(3, 10);
    for (int i = 0; i < c.size(); ++i) c(i / 10, i % 10) = amp * rng.normal();
    return VectorClosure([c](double x, double y) {
      Eigen::VectorXd mono(10);
      mono << 1, x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y,
          y * y * y;
      return Eigen::VectorXd(c * mono);
    });
  };
  const MetricField g = metric_stretched(0.5);
  std::vector<double> cp;
  for (int n : {4, 8}) {
    const Mesh m = Mesh::structured(CellKind::Quad, n, n, 0, 0, 1, 1);
    const DGSpace s(m, 2);
    const LiftingAssembly a(s, 2, 2);
    Rng rng(47);
    double cmax = 0.0;
    for (int t = 0; t < 200; ++t) {
      const DGField z = interpolate(s, 3, random_poly(rng, 0.7));
      const DGField v = interpolate(s, 3, random_poly(rng, 1.0));
      const DGField w = interpolate(s, 3, random_poly(rng, 1.0));
      const double es = energy_preprocess(0.0, g, a, z).stretching;
      const double ratio =
          std::abs(forms_preprocess(g, a, z, v, w).a_s) /
          (std::sqrt(es) * h2_norm(v) * h2_norm(w));
      cmax = std::max(cmax, ratio);
    }
    cp.push_back(cmax);
  }
  MESSAGE("stretching continuity constant: " << cp[0] << " " << cp[1]);
  // recorded 0.8675 / 0.8637; asserted within 2x of the recorded scale
  CHECK(cp[0] > 0.43);
  CHECK(cp[1] > 0.43);
  CHECK(cp[0] < 1.74);
  CHECK(cp[1] < 1.74);
  CHECK(cp[1] <= 2.0 * cp[0]);
  CHECK(cp[0] <= 2.0 * cp[1]);
}

TEST_CASE("coercivity of the energy over random fields") {
  std::vector<double> cmin;
  Rng rng(53);
  for (int n : {4, 8}) {
    const Mesh m = Mesh::structured(CellKind::Quad, n, n, 0, 0, 1, 1);
    const DGSpace s(m, 2);
    const LiftingAssembly a(s, 2, 2);
    const EnergyParams p = free_params(metric_identity(), 3.0, 1.0);
    double lo = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 50; ++t) {
      const DGField y = random_field(s, 3, rng);
      const double semi = h2_semi_norm(y);
      lo = std::min(lo, energy_Eh(p, a, y).total / (semi * semi));
    }
    cmin.push_back(lo);
  }
  MESSAGE("coercivity constant: " << cmin[0] << " " << cmin[1]);
  // recorded 0.577 / 0.664; asserted within 2x of the recorded scale
  CHECK(cmin[0] > 0.29);
  CHECK(cmin[1] > 0.29);
  CHECK(cmin[1] >= 0.5 * cmin[0]);
  CHECK(cmin[1] <= 2.0 * cmin[0]);
}

TEST_CASE("continuous energy: II and Hessian forms, pointwise gap") {
  // cylinder, g = I: both integrands are constant 1 * weights
  {
    const Mesh m = Mesh::structured(CellKind::Quad, 8, 4, 0, 0, kPi, 1);
    const DGSpace s(m, 3);
    const ImmersionEnergyCheck chk =
        continuous_energy_check(metric_cylinder(), 3.0, 2.0, s);
    const double limit = 3.0 / 12.0 * (1.0 + 2.0 / 8.0) * kPi;
    CHECK(chk.e_via_ii == doctest::Approx(limit).epsilon(1e-12));
    CHECK(chk.e_via_hessian ==
          doctest::Approx(chk.e_via_ii).epsilon(1e-10));
    CHECK(std::abs(chk.f1_min) <= 1e-10);
    CHECK(std::abs(chk.f1_max) <= 1e-10);
  }

  // flat plane: zero energy
  {
    const Mesh m = Mesh::structured(CellKind::Quad, 2, 2, 0, 0, 1, 1);
    const DGSpace s(m, 2);
    const ImmersionEnergyCheck chk =
        continuous_energy_check(metric_identity(), 3.0, 0.5, s);
    CHECK(std::abs(chk.e_via_ii) <= 1e-15);
    CHECK(std::abs(chk.e_via_hessian) <= 1e-15);
  }

  // parabolic sheet with g = diag(1+x^2, 1): known gap x^2 / (1+x^2)^3
  {
    const Mesh m = Mesh::structured(CellKind::Quad, 6, 6, 0, 0, 1, 1);
    const DGSpace s(m, 2);
    const MetricField g = catenoid_like();
    const ImmersionEnergyCheck chk = continuous_energy_check(g, 3.0, 0.0, s);
    CHECK(chk.f1_min >= -1e-10);
    double fmin = std::numeric_limits<double>::infinity(), fmax = 0.0;
    double gap = 0.0;
    for (int k = 0; k < m.num_elements(); ++k) {
      const ElemGeom& eg = s.geom[k];
      for (int q = 0; q < eg.qpts.rows(); ++q) {
        const double x = eg.qpts(q, 0);
        const double t = 1.0 + x * x;
        const double f1 = x * x / (t * t * t);
        fmin = std::min(fmin, f1);
        fmax = std::max(fmax, f1);
        gap += eg.qw(q) * 3.0 / 12.0 * f1;
      }
    }
    CHECK(chk.f1_min == doctest::Approx(fmin).epsilon(1e-12));
    CHECK(chk.f1_max == doctest::Approx(fmax).epsilon(1e-12));
    CHECK(chk.e_via_hessian - chk.e_via_ii ==
          doctest::Approx(gap).epsilon(1e-10));
  }

  // inadmissible pairing: stretched metric with the wrong immersion
  {
    const Mesh m = Mesh::structured(CellKind::Quad, 2, 2, 0, 0, 1, 1);
    const DGSpace s(m, 2);
    MetricField wrong = catenoid_like();
    wrong.g = metric_stretched(1.0).g;  // depends on x2, immersion on x1
    CHECK_THROWS_WITH_AS(continuous_energy_check(wrong, 3.0, 0.0, s),
                         doctest::Contains("violates"), Error);
  }
}

TEST_CASE("forcing load matches the linear functional") {
  const Mesh m = Mesh::structured(CellKind::Quad, 3, 3, 0, 0, 1, 1);
  const DGSpace s(m, 2);
  const LiftingAssembly a(s, 2, 2);
  EnergyParams p = free_params(metric_identity());
  p.forcing = zero_mean_forcing();
  const Eigen::MatrixXd F = forcing_load(p, s);
  Rng rng(61);
  const DGField v = random_field(s, 3, rng);
  const int n = s.num_dofs();
  double viaF = 0.0;
  for (int c = 0; c < 3; ++c) viaF += F.col(c).dot(v.coeffs.segment(c * n, n));
  CHECK(viaF == doctest::Approx(forcing_dot(p.forcing, v)).epsilon(1e-12));
  CHECK(viaF == doctest::Approx(-energy_Eh(p, a, v).forcing).epsilon(1e-12));
}

TEST_CASE("error paths: mode mismatch, bad stabilization, bad forcing") {
  Mesh m = Mesh::structured(CellKind::Quad, 2, 2, 0, 0, 1, 1);
  mark_dirichlet_sides(m, {"left"});
  const DGSpace s(m, 2);
  const LiftingAssembly ai(s, 2, 2, Skeleton::Interior);
  const LiftingAssembly aa(s, 2, 2, Skeleton::Active);
  const DGField y(s, 3);

  EnergyParams pd = free_params(metric_identity());
  pd.mode = BoundaryMode::Dirichlet;
  CHECK_THROWS_WITH_AS(energy_Eh(pd, ai, y), doctest::Contains("skeleton"),
                       Error);
  EnergyParams pf = free_params(metric_identity());
  CHECK_THROWS_WITH_AS(energy_Eh(pf, aa, y), doctest::Contains("skeleton"),
                       Error);

  EnergyParams pg = free_params(metric_identity());
  pg.gamma0 = 0.0;
  CHECK_THROWS_WITH_AS(energy_Eh(pg, ai, y), doctest::Contains("positive"),
                       Error);

  EnergyParams pm = free_params(metric_custom([](double x, double) {
    Eigen::Matrix2d g = Eigen::Matrix2d::Identity();
    g(0, 0) = x - 0.5;
    return g;
  }));
  CHECK_THROWS_WITH_AS(energy_Eh(pm, ai, y), doctest::Contains("not SPD"),
                       Error);

  EnergyParams pz = free_params(metric_identity());
  pz.forcing = [](double, double) {
    return Eigen::VectorXd(Eigen::Vector3d(1.0, 0.0, 0.0));
  };
  CHECK_THROWS_WITH_AS(energy_Eh(pz, ai, y), doctest::Contains("zero mean"),
                       Error);
}
