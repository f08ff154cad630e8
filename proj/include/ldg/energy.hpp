#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "ldg/lifting.hpp"
#include "ldg/metric.hpp"
#include "ldg/space.hpp"

namespace ldg {

enum class BoundaryMode { Free, Dirichlet };

struct EnergyParams {
  double mu = 1.0;
  double lambda = 0.0;
  double gamma0 = 1.0;
  double gamma1 = 1.0;
  BoundaryMode mode = BoundaryMode::Free;
  MetricField metric;
  VectorClosure forcing;   // 3 components; empty means zero
  VectorClosure bc_value;  // Dirichlet position data, 3 components
  VectorClosure bc_grad;   // Dirichlet gradient data, columns comp*2+deriv
};

struct EnergyBreakdown {
  double frobenius = 0.0;
  double trace = 0.0;
  double grad_jump = 0.0;
  double value_jump = 0.0;
  double forcing = 0.0;  // signed contribution, -(f, y)
  double total = 0.0;
};

// Discrete bending energy. Jumps run over the interior skeleton in free
// mode and over the active skeleton (with boundary data subtracted) in
// Dirichlet mode; the assembly's skeleton choice must match.
EnergyBreakdown energy_Eh(const EnergyParams& p, const LiftingAssembly& a,
                          const DGField& y);

// Sum over elements of the Frobenius norm of the integrated constraint
// residual matrix.
double metric_defect(const DGField& y, const MetricField& g);

// Symmetric flow form: twice the quadratic part of the energy, boundary
// data entering both slots. Direct quadrature evaluation.
double form_ah(const EnergyParams& p, const LiftingAssembly& a,
               const DGField& y, const DGField& v);

// Assembled flow form. The matrix acts on one scalar component at a time;
// the full form over the data-affine space is
//   a_h(y, v) = sum_c y_c' A v_c + load_c . (y_c + v_c) + constant,
// so the energy gradient in component c reads A y_c + load_c.
struct AhOperator {
  Eigen::SparseMatrix<double> A;
  Eigen::MatrixXd load;  // ndofs x 3, zero without boundary data
  double constant = 0.0;
  double apply(const DGField& y, const DGField& v) const;
};
AhOperator assemble_ah(const EnergyParams& p, const LiftingAssembly& a);

// Forcing functional (f_c, psi_i); validates the zero-mean requirement in
// free mode. ndofs x 3, zero columns when no forcing is set.
Eigen::MatrixXd forcing_load(const EnergyParams& p, const DGSpace& s);

// Linearized metric constraint form sum_T int mult_T : (grad v' grad y +
// grad y' grad v) with one symmetric 2x2 multiplier per element.
double form_bh(const DGField& y, const DGField& v,
               const std::vector<Eigen::Matrix2d>& mult);

// Constraint matrix: rows 3T+{0,1,2} hold the (11), (22), (12) components
// of the linearization at y, the off-diagonal row carrying the pairing
// factor 2; columns are the stacked scalar dofs of v (component-major).
Eigen::SparseMatrix<double> assemble_bh(const DGField& y);

// Gram matrix of the piecewise constant symmetric multipliers,
// diag(|T|, |T|, 2|T|) per element.
Eigen::SparseMatrix<double> multiplier_gram(const Mesh& m);

// Preprocessing energies: stretching + sigma_h * bending (unit weights,
// plain jumps over the assembly's skeleton).
struct PreEnergies {
  double stretching = 0.0;
  double bending = 0.0;
  double total = 0.0;
};
PreEnergies energy_preprocess(double sigma_h, const MetricField& g,
                              const LiftingAssembly& a, const DGField& y);

// Stretching form around an anchor state and the bending regularizer.
struct PreForms {
  double a_s = 0.0;
  double a_b = 0.0;
};
PreForms forms_preprocess(const MetricField& g, const LiftingAssembly& a,
                          const DGField& anchor, const DGField& u,
                          const DGField& v);

// Componentwise scalar matrices for the preprocessing flow:
// assemble_as: 2 int grad v . (R grad u) with R = grad y' grad y - g.
// assemble_ab: Hessian pairing plus unit-weight jump penalties.
Eigen::SparseMatrix<double> assemble_as(const MetricField& g,
                                        const DGField& anchor);
Eigen::SparseMatrix<double> assemble_ab(const MetricField& g,
                                        const LiftingAssembly& a);

// Quadrature comparison of the bending energy written through the second
// fundamental form versus through componentwise Hessians, for an analytic
// isometric immersion attached to the metric. f1 is the pointwise gap
// sum_m |G D2y_m G|^2 - |G II G|^2, nonnegative up to roundoff.
struct ImmersionEnergyCheck {
  double e_via_ii = 0.0;
  double e_via_hessian = 0.0;
  double f1_min = 0.0;
  double f1_max = 0.0;
};
ImmersionEnergyCheck continuous_energy_check(const MetricField& g, double mu,
                                             double lambda, const DGSpace& s);

}  // namespace ldg
