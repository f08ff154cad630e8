#include <cmath>
#include <cstdio>
#include <limits>

#include "doctest.h"
#include "ldg/common.hpp"
#include "ldg/solver.hpp"

using namespace ldg;

namespace {

SpMat sparse_of(const Eigen::MatrixXd& d) {
  SpMat s(d.rows(), d.cols());
  std::vector<Eigen::Triplet<double>> tri;
  for (int i = 0; i < d.rows(); ++i)
    for (int j = 0; j < d.cols(); ++j)
      if (d(i, j) != 0.0) tri.emplace_back(i, j, d(i, j));
  s.setFromTriplets(tri.begin(), tri.end());
  return s;
}

Eigen::MatrixXd random_dense(int r, int c, Rng& rng) {
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

Eigen::MatrixXd random_spd(int n, Rng& rng) {
  const Eigen::MatrixXd a = random_dense(n, n, rng);
  return a.transpose() * a + Eigen::MatrixXd::Identity(n, n);
}

// fine sphere sampling of min |B' mu| plus a projected-gradient polish
double brute_min_singular(const Eigen::MatrixXd& b, Rng& rng) {
  const int m = static_cast<int>(b.rows());
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd bestmu = Eigen::VectorXd::Unit(m, 0);
  Eigen::VectorXd mu(m);
  for (int t = 0; t < 200000; ++t) {
    for (int i = 0; i < m; ++i) mu(i) = rng.normal();
    mu.normalize();
    const double v = (b.transpose() * mu).norm();
    if (v < best) {
      best = v;
      bestmu = mu;
    }
  }
  const Eigen::MatrixXd c = b * b.transpose();
  const double step = 1.0 / c.norm();
  mu = bestmu;
  for (int it = 0; it < 500; ++it) {
    const Eigen::VectorXd grad = c * mu - mu.dot(c * mu) * mu;
    mu = (mu - step * grad).normalized();
  }
  return std::sqrt(mu.dot(c * mu));
}

}  // namespace

TEST_CASE("spd solve: hand values, residual bound, pivot error") {
  {
    const SpMat eye = sparse_of(Eigen::MatrixXd::Identity(4, 4));
    Eigen::VectorXd rhs(4);
    rhs << 1, -2, 3, 0.5;
    CHECK((solve_spd(eye, rhs) - rhs).norm() <= 1e-14);
  }
  {
    Eigen::MatrixXd m(2, 2);
    m << 2, 1, 1, 2;
    Eigen::VectorXd rhs(2);
    rhs << 1, 1;
    const Eigen::VectorXd x = solve_spd(sparse_of(m), rhs);
    CHECK(x(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(x(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  }
  {
    Rng rng(3);
    const Eigen::MatrixXd md = random_spd(50, rng);
    const SpMat m = sparse_of(md);
    const Eigen::VectorXd rhs = random_dense(50, 1, rng);
    const Eigen::VectorXd x = solve_spd(m, rhs);
    const double minf = md.cwiseAbs().rowwise().sum().maxCoeff();
    CHECK((md * x - rhs).norm() <= 1e-10 * (minf * x.norm() + rhs.norm()));

    // determinism: same bits on a repeated solve
    const Eigen::VectorXd x2 = solve_spd(m, rhs);
    CHECK((x.array() == x2.array()).all());
  }
  {
    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 3);
    bad(1, 1) = -1.0;
    Eigen::VectorXd rhs = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_WITH_AS(solve_spd(sparse_of(bad), rhs),
                         doctest::Contains("pivot"), Error);
  }
}

TEST_CASE("kkt solve: hand system, rank deficiency, residuals") {
  const SpMat eye2 = sparse_of(Eigen::MatrixXd::Identity(2, 2));
  Eigen::VectorXd f(2);
  f << 1, 1;

  // no constraints reduces to the SPD solve
  {
    const SpMat b(0, 2);
    const KktSolution s = solve_kkt(eye2, b, f, Eigen::VectorXd(0));
    CHECK((s.primal - f).norm() <= 1e-14);
    CHECK(s.multiplier.size() == 0);
    CHECK(s.report.deficiency == 0);
  }

  // single constraint x1 + x2 = 0 with rhs pushing toward (1,1)
  {
    Eigen::MatrixXd bd(1, 2);
    bd << 1, 1;
    const KktSolution s =
        solve_kkt(eye2, sparse_of(bd), f, Eigen::VectorXd::Zero(1));
    CHECK(s.primal.norm() <= 1e-12);
    CHECK(s.multiplier(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.report.deficiency == 0);
    CHECK(s.report.residual_primal <= 1e-9);
    CHECK(s.report.residual_constraint <= 1e-9);
  }

  // duplicated row: deficiency 1, same primal, minimum-norm multiplier
  {
    Eigen::MatrixXd bd(2, 2);
    bd << 1, 1, 1, 1;
    const KktSolution s =
        solve_kkt(eye2, sparse_of(bd), f, Eigen::VectorXd::Zero(2));
    CHECK(s.primal.norm() <= 1e-12);
    CHECK(s.report.deficiency == 1);
    CHECK(s.multiplier(0) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(s.multiplier(1) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(s.report.residual_primal <= 1e-9);
    CHECK(s.report.residual_constraint <= 1e-9);
    CHECK(s.report.dense_fallback);
  }

  // empty row: dropped with zero multiplier; inconsistent rhs rejected
  {
    Eigen::MatrixXd bd(2, 2);
    bd << 1, 1, 0, 0;
    const KktSolution s =
        solve_kkt(eye2, sparse_of(bd), f, Eigen::VectorXd::Zero(2));
    CHECK(s.primal.norm() <= 1e-12);
    CHECK(s.multiplier(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.multiplier(1) == 0.0);
    CHECK(s.report.deficiency == 1);

    Eigen::VectorXd g(2);
    g << 0, 1;
    CHECK_THROWS_WITH_AS(solve_kkt(eye2, sparse_of(bd), f, g),
                         doctest::Contains("no entries"), Error);
  }

  // random full-rank system: both block residuals within tolerance
  {
    Rng rng(17);
    const Eigen::MatrixXd ad = random_spd(40, rng);
    const Eigen::MatrixXd bd = random_dense(6, 40, rng);
    const Eigen::VectorXd fr = random_dense(40, 1, rng);
    const Eigen::VectorXd gr = random_dense(6, 1, rng);
    const KktSolution s = solve_kkt(sparse_of(ad), sparse_of(bd), fr, gr);
    CHECK(s.report.deficiency == 0);
    CHECK(!s.report.dense_fallback);
    CHECK(s.report.residual_primal <= 1e-9);
    CHECK(s.report.residual_constraint <= 1e-9);
    CHECK((bd * s.primal - gr).norm() <= 1e-9 * (1.0 + gr.norm()));

    const KktSolution s2 = solve_kkt(sparse_of(ad), sparse_of(bd), fr, gr);
    CHECK((s.primal.array() == s2.primal.array()).all());
    CHECK((s.multiplier.array() == s2.multiplier.array()).all());
  }
}

TEST_CASE("generalized smallest singular value") {
  const SpMat eye3 = sparse_of(Eigen::MatrixXd::Identity(3, 3));
  CHECK(smallest_generalized_singular_value(eye3, eye3, eye3) ==
        doctest::Approx(1.0).epsilon(1e-12));

  {
    Eigen::MatrixXd bd = Eigen::MatrixXd::Identity(3, 3);
    bd.row(1).setZero();
    CHECK(smallest_generalized_singular_value(sparse_of(bd), eye3, eye3) <=
          1e-12);
  }

  {
    Rng rng(29);
    const Eigen::MatrixXd bd = random_dense(6, 12, rng);
    const SpMat gv = sparse_of(Eigen::MatrixXd::Identity(12, 12));
    const SpMat gm = sparse_of(Eigen::MatrixXd::Identity(6, 6));
    const double sv =
        smallest_generalized_singular_value(sparse_of(bd), gv, gm);
    const double ref = brute_min_singular(bd, rng);
    CHECK(std::abs(sv - ref) <= 0.05 * ref);
  }

  // whitening invariance against an explicit eigen-decomposition path
  {
    Rng rng(31);
    const Eigen::MatrixXd bd = random_dense(4, 9, rng);
    const Eigen::MatrixXd gvd = random_spd(9, rng);
    const Eigen::MatrixXd gmd = random_spd(4, rng);
    const double sv = smallest_generalized_singular_value(
        sparse_of(bd), sparse_of(gvd), sparse_of(gmd));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ev(gvd), em(gmd);
    const Eigen::MatrixXd gv_is = ev.operatorInverseSqrt();
    const Eigen::MatrixXd gm_is = em.operatorInverseSqrt();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(gm_is * bd * gv_is);
    const double ref = svd.singularValues().tail(1)(0);
    CHECK(sv == doctest::Approx(ref).epsilon(1e-9));
  }

  {
    Eigen::MatrixXd gbad = Eigen::MatrixXd::Identity(3, 3);
    gbad(2, 2) = -2.0;
    CHECK_THROWS_WITH_AS(
        smallest_generalized_singular_value(eye3, sparse_of(gbad), eye3),
        doctest::Contains("not SPD"), Error);
  }
}

TEST_CASE("largest generalized eigenvalue by power iteration") {
  {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
    a.diagonal() << 1, 2, 5;
    const SpMat eye = sparse_of(Eigen::MatrixXd::Identity(3, 3));
    CHECK(largest_generalized_eigenvalue(sparse_of(a), eye) ==
          doctest::Approx(5.0).epsilon(1e-9));
  }
  {
    Rng rng(41);
    const Eigen::MatrixXd ad = random_spd(12, rng);
    const Eigen::MatrixXd bd = random_spd(12, rng);
    const double lam =
        largest_generalized_eigenvalue(sparse_of(ad), sparse_of(bd), 2000);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(ad, bd);
    const double ref = ges.eigenvalues().maxCoeff();
    CHECK(lam == doctest::Approx(ref).epsilon(1e-7));
  }
}

TEST_CASE("block diagonal replication and matrix dump") {
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 0, 3;
  const SpMat bd = block_diag(sparse_of(m), 3);
  CHECK(bd.rows() == 6);
  CHECK(bd.cols() == 6);
  CHECK(bd.nonZeros() == 9);
  for (int k = 0; k < 3; ++k) {
    CHECK(bd.coeff(2 * k, 2 * k) == 1.0);
    CHECK(bd.coeff(2 * k, 2 * k + 1) == 2.0);
    CHECK(bd.coeff(2 * k + 1, 2 * k + 1) == 3.0);
    CHECK(bd.coeff(2 * k + 1, 2 * k) == 0.0);
  }

  const char* path = "dump_test.txt";
  dump_matrix(bd, path);
  std::FILE* fp = std::fopen(path, "r");
  REQUIRE(fp != nullptr);
  SpMat back(6, 6);
  std::vector<Eigen::Triplet<double>> tri;
  int r, c;
  double v;
  while (std::fscanf(fp, "%d %d %lg", &r, &c, &v) == 3)
    tri.emplace_back(r, c, v);
  std::fclose(fp);
  std::remove(path);
  back.setFromTriplets(tri.begin(), tri.end());
  CHECK(back.nonZeros() == bd.nonZeros());
  CHECK((Eigen::MatrixXd(back) - Eigen::MatrixXd(bd)).norm() == 0.0);
}
