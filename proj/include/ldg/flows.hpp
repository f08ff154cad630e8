#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ldg/energy.hpp"
#include "ldg/solver.hpp"

namespace ldg {

struct FlowConfig {
  double tau = 0.0;            // <= 0: defaults to the mesh h_max
  double tol_increment = 0.0;  // <= 0: defaults to 1e-8 sqrt(1 + E_h(y0))
  int max_steps = 200;
  double eps0 = 1.0;           // initial defect budget
  bool log_pre_energies = true;  // record E_s, E_b of each iterate
};

struct FlowStepRow {
  int step = 0;
  double energy = 0.0;      // E_h of the iterate this row describes
  double stretching = 0.0;  // E_s of the iterate (if logged)
  double bending = 0.0;     // unit-weight bending part (if logged)
  double defect = 0.0;      // D_h of the iterate
  double incr_norm = 0.0;   // ||dy|| in the flow metric (0 on the initial row)
  double grad_incr_sq = 0.0;  // ||grad dy||_L2^2
  double kkt_residual = 0.0;
  double constraint_residual = 0.0;  // max_T |L_T(y_prev; dy)|_F
  double tau = 0.0;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();  // componentwise integral
  int deficiency = 0;    // dropped/deficient constraint rows this step
  bool fallback = false; // dense minimum-norm fallback used
};

struct FlowState {
  DGField y;
  Eigen::VectorXd multiplier;  // 3 per element, from the last accepted step
  std::vector<FlowStepRow> log;  // log[0] describes the initial iterate
  BoundaryMode mode = BoundaryMode::Free;
  double tau = 0.0;
  double tol = 0.0;
  double eps0 = 0.0;
  double energy0 = 0.0;
  double defect0 = 0.0;
  bool converged = false;
  bool defect_budget_exceeded = false;  // D_h(y0) > eps0
};

struct StepDiagnostics {
  double kkt_residual = 0.0;
  double constraint_residual = 0.0;
  int deficiency = 0;
  bool fallback = false;
};

struct FlowStep {
  DGField dy;
  Eigen::VectorXd multiplier;
  StepDiagnostics diag;
};

// One implicit step of the constrained flow at y_n: solves the saddle system
//   tau^-1 (dy, v)_* + a_h(dy, v) + b_h(y_n; v, mult) = (f, v) - a_h(y_n, v)
//   b_h(y_n; dy, .) = 0
// with the full H2h product in free mode and the active-skeleton semi
// product in Dirichlet mode. Throws if the linearized constraint residual
// exceeds 1e-9 (1 + ||grad y_n||^2).
FlowStep main_flow_step(const FlowConfig& c, const EnergyParams& p,
                        const LiftingAssembly& a, const DGField& y_n);

// Runs steps until ||dy|| <= tol or max_steps. Hard error if a step
// increases E_h(y) + tau^-1 ||dy||^2 beyond 1e-10.
FlowState run_main_flow(const FlowConfig& c, const EnergyParams& p,
                        const LiftingAssembly& a, const DGField& y0);

// Smallest generalized singular value of the constraint block at the anchor:
//   min over mult of max over v of b_h(y; v, mult) / (||v||_H2h ||mult||).
// Diagnostic only; 0 for a zero anchor.
double estimate_infsup(const LiftingAssembly& a, const DGField& y_anchor);

struct PreprocessConfig {
  MetricField metric;
  double sigma_h = 0.0;
  double tau = 1.0;        // cap; the step rule may shorten it
  bool adaptive = true;    // enforce tau <= c_h(y_n)/2
  double stop_factor = 1.0;  // sigma_h > 0: stop when E_p <= stop_factor sigma_h
  double abs_tol = 1e-10;    // sigma_h = 0: stop when E_s <= abs_tol
  int max_steps = 200;
  double cp = 0.0;   // <= 0: estimated by sampling
  double cpt = 0.0;  // <= 0: estimated by sampling
  BoundaryMode mode = BoundaryMode::Free;
  int samples = 200;
  std::uint64_t seed = 1234;
};

struct PreStepRow {
  int step = 0;
  double stretching = 0.0;
  double bending = 0.0;
  double total = 0.0;
  double incr_norm = 0.0;
  double tau = 0.0;     // step size actually used (0 on the initial row)
  double c_h = 0.0;     // step rule constant evaluated at this iterate
  int halvings = 0;
};

struct PreStep {
  DGField dy;
  double tau_used = 0.0;
  double c_h = 0.0;
  int halvings = 0;
  PreEnergies energies;    // energies of the accepted iterate
  double incr_norm = 0.0;  // metric norm of dy
};

struct PreprocessState {
  DGField y;
  std::vector<PreStepRow> log;  // log[0] describes the initial iterate
  double cp = 0.0, cpt = 0.0;
  bool constants_estimated = false;
  bool converged = false;
  PreEnergies final_energies;
  double defect = 0.0;
  double defect_bound_energy = 0.0;  // sqrt(2 |Omega| E_s), checked on stop
  double defect_bound_sigma = 0.0;   // sqrt(2 |Omega| stop_factor sigma_h)
};

// Step rule constant c_h at preprocessing energy ep:
//   c_h = min{ (1 + cp sqrt(ep))^-1, 1/d },
//   d = cp/2 sqrt(ep) + cpt/2 ((ep+1)(sqrt(ep)+|g|_L1)/h_min + sigma ep).
double step_rule_ch(double ep, double sigma_h, double h_min, double g_l1,
                    double cp, double cpt);

// Doubled maxima over sampled smooth fields of the stretching-form
// continuity ratio (cp) and the first-form increment bound (cpt).
struct ConstantsEstimate {
  double cp = 0.0;
  double cpt = 0.0;
};
ConstantsEstimate estimate_step_constants(const MetricField& g,
                                          const LiftingAssembly& a,
                                          double sigma_h, int samples,
                                          std::uint64_t seed);

// One linearized stretching step: SPD solve of
//   tau^-1 (dy, v)_* + a_s(y_n; dy, v) + sigma a_b(dy, v) = -(same forms at y_n).
// tau starts at min(config tau, c_h/2) and is halved (at most 20 times) until
// E_p(y+dy) + (2 tau)^-1 ||dy||^2 <= E_p(y) + 1e-10. Estimates cp/cpt first
// if they are not configured; run_preprocess resolves them once instead.
PreStep preprocess_step(const PreprocessConfig& pc, const LiftingAssembly& a,
                        const DGField& y_n);

// Iterates preprocessing steps until the stop rule fires or max_steps.
// sigma_h > 0 requires free mode; on a converged sigma_h > 0 run the defect
// chain D_h <= sqrt(2 |Omega| E_s) <= sqrt(2 |Omega| stop_factor sigma_h)
// is verified and its two bounds are reported.
PreprocessState run_preprocess(const PreprocessConfig& pc,
                               const LiftingAssembly& a, const DGField& y0);

// Flat start matched to the metric average: (sqrt(mean g11) x1,
// sqrt(mean g22) x2, 0).
DGField flat_start(const MetricField& g, const DGSpace& s);

struct BilaplacianParams {
  double gamma0 = 1.0;   // value-jump weight of the Nitsche form
  double gamma1 = 1.0;   // gradient-jump weight
  VectorClosure value;   // Dirichlet position data (3), empty = zero
  VectorClosure grad;    // Dirichlet gradient data (6, comp*2+deriv)
  VectorClosure forcing; // right-hand side (3), empty = zero
};

// Dirichlet initializer: SPD solve of the Hessian-reconstruction form with
// unit metric and boundary data entering through the liftings. Reproduces
// global polynomials of degree <= k exactly.
DGField bilaplacian_init(const BilaplacianParams& bp,
                         const LiftingAssembly& a);

struct CertificateEntry {
  std::string name;
  bool passed = false;
  bool skipped = false;
  double value = 0.0;  // checked quantity
  double bound = 0.0;  // admissible bound
  std::string detail;
};

struct CertificateReport {
  std::vector<CertificateEntry> entries;
  double beta_h = -1.0;     // inf-sup estimate at the final iterate, -1 if skipped
  double poincare_c = 0.0;  // gradient/H2h ratio used in the defect bound
  bool passed = false;
};

// Recomputes the four flow certificates from a finished run: per-step energy
// decay, the final defect bound, mean conservation (skipped under Dirichlet
// data), and the stationarity residual over sampled constraint-kernel
// directions. Decay and mean entries use only the log, so a corrupted log
// fails the matching entry.
CertificateReport flow_certificates(const EnergyParams& p,
                                    const LiftingAssembly& a,
                                    const FlowState& state,
                                    std::uint64_t seed = 777);

}  // namespace ldg
