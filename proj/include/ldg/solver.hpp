#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>

namespace ldg {

using SpMat = Eigen::SparseMatrix<double>;

// Reusable SPD factorization (simplicial LDLT, deterministic AMD ordering).
// Construction throws on a non-positive pivot, naming its index.
class SpdFactor {
public:
  explicit SpdFactor(const SpMat& m);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  int size() const { return n_; }

private:
  Eigen::SimplicialLDLT<SpMat> fact_;
  int n_ = 0;
};

Eigen::VectorXd solve_spd(const SpMat& m, const Eigen::VectorXd& rhs);

// Saddle solve  [A B'; B 0] [x; mult] = [f; g].
// Zero constraint rows are dropped up front (their multipliers are zero);
// if the sparse LU of the reduced saddle matrix fails or leaves a large
// residual (rank-deficient B), a dense complete-orthogonal solve provides
// the minimum-norm multiplier. The report carries the detected rank
// deficiency of B and the relative residual of each block.
struct KktReport {
  int deficiency = 0;
  double residual_primal = 0.0;
  double residual_constraint = 0.0;
  bool dense_fallback = false;
};

struct KktSolution {
  Eigen::VectorXd primal;
  Eigen::VectorXd multiplier;
  KktReport report;
};

KktSolution solve_kkt(const SpMat& a, const SpMat& b,
                      const Eigen::VectorXd& f, const Eigen::VectorXd& g);

// min over multipliers of the Gram-normalized best pairing,
//   min_mu max_v  (mu' B v) / (|v|_gv |mu|_gmu),
// the smallest singular value of the whitened constraint matrix. Dense
// path, intended for diagnostic problem sizes.
double smallest_generalized_singular_value(const SpMat& b, const SpMat& gv,
                                           const SpMat& gmu);

// max over x of (x'Ax)/(x'Bx) for symmetric A and SPD B, by B-orthogonal
// power iteration with a deterministic start.
double largest_generalized_eigenvalue(const SpMat& a, const SpMat& b,
                                      int iters = 400, double tol = 1e-12);

// diag(m, ..., m) with `count` copies, for componentwise operators acting
// on stacked component-major vectors.
SpMat block_diag(const SpMat& m, int count);

// coordinate text dump "row col %.17g" per entry, for offline inspection
void dump_matrix(const SpMat& m, const std::string& path);

}  // namespace ldg
