#include "ldg/solver.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/SparseLU>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "ldg/common.hpp"

namespace ldg {

SpdFactor::SpdFactor(const SpMat& m) : n_(static_cast<int>(m.rows())) {
  if (m.rows() != m.cols()) throw Error("solve_spd: matrix not square");
  fact_.compute(m);
  if (fact_.info() != Eigen::Success)
    throw Error("solve_spd: factorization failed");
  const Eigen::VectorXd d = fact_.vectorD();
  for (int i = 0; i < d.size(); ++i)
    if (!(d(i) > 0.0)) {
      std::ostringstream os;
      os << "solve_spd: non-positive pivot at index " << i << " (value "
         << d(i) << ")";
      throw Error(os.str());
    }
}

Eigen::VectorXd SpdFactor::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != n_) throw Error("solve_spd: rhs length mismatch");
  return fact_.solve(rhs);
}

Eigen::VectorXd solve_spd(const SpMat& m, const Eigen::VectorXd& rhs) {
  return SpdFactor(m).solve(rhs);
}

namespace {

KktReport kkt_residuals(const SpMat& a, const SpMat& b,
                        const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                        const Eigen::VectorXd& x,
                        const Eigen::VectorXd& mult) {
  KktReport r;
  Eigen::VectorXd rp = a * x - f;
  if (mult.size() > 0) rp += b.transpose() * mult;
  r.residual_primal = rp.norm() / (1.0 + f.norm());
  if (b.rows() > 0)
    r.residual_constraint = (b * x - g).norm() / (1.0 + g.norm());
  return r;
}

}  // namespace

KktSolution solve_kkt(const SpMat& a, const SpMat& b,
                      const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.rows());
  if (a.rows() != a.cols() || f.size() != n || g.size() != m ||
      (m > 0 && b.cols() != n))
    throw Error("solve_kkt: inconsistent block dimensions");

  KktSolution sol;
  if (m == 0) {
    sol.primal = solve_spd(a, f);
    sol.multiplier.resize(0);
    sol.report = kkt_residuals(a, b, f, g, sol.primal, sol.multiplier);
    return sol;
  }

  // constraint rows without entries: multiplier 0, consistency required
  std::vector<char> nonzero(m, 0);
  for (int c = 0; c < b.outerSize(); ++c)
    for (SpMat::InnerIterator it(b, c); it; ++it)
      if (it.value() != 0.0) nonzero[it.row()] = 1;
  std::vector<int> keep, rowmap(m, -1);
  for (int i = 0; i < m; ++i)
    if (nonzero[i]) {
      rowmap[i] = static_cast<int>(keep.size());
      keep.push_back(i);
    } else if (std::abs(g(i)) > 1e-12 * (1.0 + g.cwiseAbs().maxCoeff())) {
      std::ostringstream os;
      os << "solve_kkt: constraint row " << i
         << " has no entries but nonzero right-hand side " << g(i);
      throw Error(os.str());
    }
  const int mr = static_cast<int>(keep.size());
  const int dropped = m - mr;

  if (mr == 0) {
    sol.primal = solve_spd(a, f);
    sol.multiplier = Eigen::VectorXd::Zero(m);
    sol.report = kkt_residuals(a, b, f, g, sol.primal, sol.multiplier);
    sol.report.deficiency = dropped;
    return sol;
  }

  std::vector<Eigen::Triplet<double>> tri;
  tri.reserve(static_cast<size_t>(a.nonZeros()) + 2 * b.nonZeros());
  for (int c = 0; c < a.outerSize(); ++c)
    for (SpMat::InnerIterator it(a, c); it; ++it)
      tri.emplace_back(static_cast<int>(it.row()), c, it.value());
  for (int c = 0; c < b.outerSize(); ++c)
    for (SpMat::InnerIterator it(b, c); it; ++it) {
      const int r = rowmap[it.row()];
      if (r < 0) continue;
      tri.emplace_back(n + r, c, it.value());
      tri.emplace_back(c, n + r, it.value());
    }
  SpMat S(n + mr, n + mr);
  S.setFromTriplets(tri.begin(), tri.end());
  Eigen::VectorXd rhs(n + mr);
  rhs.head(n) = f;
  for (int r = 0; r < mr; ++r) rhs(n + r) = g(keep[r]);

  auto expand = [&](const Eigen::VectorXd& xz, int extra_def, bool dense) {
    sol.primal = xz.head(n);
    sol.multiplier = Eigen::VectorXd::Zero(m);
    for (int r = 0; r < mr; ++r) sol.multiplier(keep[r]) = xz(n + r);
    sol.report = kkt_residuals(a, b, f, g, sol.primal, sol.multiplier);
    sol.report.deficiency = dropped + extra_def;
    sol.report.dense_fallback = dense;
  };

  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(S);
  lu.factorize(S);
  if (lu.info() == Eigen::Success) {
    Eigen::VectorXd xz = lu.solve(rhs);
    if (xz.allFinite()) {
      // one refinement pass; per-step roundoff otherwise accumulates over
      // long flows and spoils exactly conserved quantities
      const Eigen::VectorXd corr = lu.solve(rhs - S * xz);
      if (corr.allFinite()) xz += corr;
      expand(xz, 0, false);
      if (sol.report.residual_primal <= 1e-9 &&
          sol.report.residual_constraint <= 1e-9)
        return sol;
    }
  }

  // rank-deficient constraints: minimum-norm solve of the full saddle
  if (n + mr > 6000)
    throw Error(
        "solve_kkt: constraint block is rank deficient and the system is "
        "too large for the dense fallback");
  const Eigen::MatrixXd Sd(S);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Sd);
  const Eigen::VectorXd xz = cod.solve(rhs);
  expand(xz, n + mr - static_cast<int>(cod.rank()), true);
  return sol;
}

double smallest_generalized_singular_value(const SpMat& b, const SpMat& gv,
                                           const SpMat& gmu) {
  const int m = static_cast<int>(b.rows());
  const int n = static_cast<int>(b.cols());
  if (m < 1) throw Error("smallest_generalized_singular_value: empty B");
  if (gv.rows() != n || gv.cols() != n || gmu.rows() != m || gmu.cols() != m)
    throw Error("smallest_generalized_singular_value: size mismatch");
  if (n > 20000)
    throw Error(
        "smallest_generalized_singular_value: dense path limited to "
        "diagnostic sizes");

  const Eigen::MatrixXd Gv(gv), Gm(gmu);
  Eigen::LLT<Eigen::MatrixXd> lv(Gv);
  if (lv.info() != Eigen::Success)
    throw Error("smallest_generalized_singular_value: Gram_v not SPD");
  Eigen::LLT<Eigen::MatrixXd> lm(Gm);
  if (lm.info() != Eigen::Success)
    throw Error("smallest_generalized_singular_value: Gram_mu not SPD");

  if (m > n) return 0.0;  // nontrivial multiplier annihilates every v
  // W = Lm^-1 B Lv^-T, smallest singular value over the multiplier space
  const Eigen::MatrixXd T =
      lv.matrixL().solve(Eigen::MatrixXd(b).transpose());  // Lv^-1 B'
  const Eigen::MatrixXd W = lm.matrixL().solve(T.transpose());
  Eigen::BDCSVD<Eigen::MatrixXd> svd(W);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

double largest_generalized_eigenvalue(const SpMat& a, const SpMat& b,
                                      int iters, double tol) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n || b.rows() != n || b.cols() != n)
    throw Error("largest_generalized_eigenvalue: size mismatch");
  const SpdFactor bf(b);
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  x /= std::sqrt(x.dot(b * x));
  double lam = 0.0;
  for (int it = 0; it < iters; ++it) {
    const Eigen::VectorXd ax = a * x;
    const double lam_new = x.dot(ax);
    const Eigen::VectorXd z = bf.solve(ax);
    const double nb = std::sqrt(z.dot(b * z));
    if (!(nb > 0.0)) return lam_new;
    x = z / nb;
    if (it > 0 && std::abs(lam_new - lam) <= tol * std::max(1.0, lam_new))
      return x.dot(a * x);
    lam = lam_new;
  }
  return x.dot(a * x);
}

SpMat block_diag(const SpMat& m, int count) {
  const int r = static_cast<int>(m.rows()), c = static_cast<int>(m.cols());
  std::vector<Eigen::Triplet<double>> tri;
  tri.reserve(static_cast<size_t>(m.nonZeros()) * count);
  for (int k = 0; k < count; ++k)
    for (int j = 0; j < m.outerSize(); ++j)
      for (SpMat::InnerIterator it(m, j); it; ++it)
        tri.emplace_back(k * r + static_cast<int>(it.row()), k * c + j,
                         it.value());
  SpMat out(count * r, count * c);
  out.setFromTriplets(tri.begin(), tri.end());
  return out;
}

void dump_matrix(const SpMat& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("dump_matrix: cannot open " + path);
  char buf[96];
  for (int c = 0; c < m.outerSize(); ++c)
    for (SpMat::InnerIterator it(m, c); it; ++it) {
      std::snprintf(buf, sizeof(buf), "%d %d %.17g\n",
                    static_cast<int>(it.row()), c, it.value());
      out << buf;
    }
}

}  // namespace ldg
