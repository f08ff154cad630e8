#pragma once

#include <Eigen/Sparse>
#include <cstdint>

#include "ldg/space.hpp"

namespace ldg {

enum class H2Mode { Semi, Full };

// Jump terms run over the interior skeleton, or additionally over Dirichlet
// boundary edges (active skeleton, used by the Dirichlet-mode flows where
// the homogeneous boundary jump of a trial/test function is its plain trace).
enum class Skeleton { Interior, Active };

// (D2_h u, D2_h v) + (h^-1 [grad u],[grad v]) + (h^-3 [u],[v]) over the
// interior skeleton; Full adds (u,v)_L2. Symmetric; Full is an inner product.
double h2_inner(const DGField& u, const DGField& v, H2Mode mode);

double h2_semi_norm(const DGField& u);           // |u|_{H2h}
double h2_norm(const DGField& u);                // ||u||_{H2h}

// Scalar N x N Gram matrices (N = scalar dof count); a vector field's Gram
// is the same matrix applied per component.
Eigen::SparseMatrix<double> gram_mass(const DGSpace& s);
Eigen::SparseMatrix<double> gram_grad(const DGSpace& s);
Eigen::SparseMatrix<double> gram_h2(const DGSpace& s, H2Mode mode,
                                    Skeleton skel);

struct InequalityReport {
  double poincare_ratio_max = 0.0;
  double sobolev_ratio_max = 0.0;
  double grad_bound_ratio_max = 0.0;
};

// Max ratios over random coefficient fields of the discrete
// Poincare-Friedrichs, Sobolev, and gradient-bound inequalities.
InequalityReport functional_inequality_check(const DGSpace& s, int samples,
                                             std::uint64_t seed = 0);

}  // namespace ldg
