#include <chrono>
#include <cmath>
#include <filesystem>

#include "ldg/app.hpp"
#include "ldg/expression.hpp"
#include "ldg/lifting.hpp"

namespace ldg {

namespace {

MetricField build_metric(const RunConfig& rc) {
  if (!rc.g11.empty()) {
    const ScalarClosure g11 = parse_expression(rc.g11);
    const ScalarClosure g22 = parse_expression(rc.g22);
    const ScalarClosure g12 =
        rc.g12.empty() ? ScalarClosure([](double, double) { return 0.0; })
                       : parse_expression(rc.g12);
    return metric_custom([g11, g12, g22](double x, double y) {
      Eigen::Matrix2d g;
      const double off = g12(x, y);
      g << g11(x, y), off, off, g22(x, y);
      return g;
    });
  }
  if (rc.metric_name == "identity") return metric_identity();
  if (rc.metric_name == "cylinder") return metric_cylinder();
  return metric_stretched(rc.metric_beta);
}

VectorClosure vector_closure(const std::array<std::string, 3>& exprs) {
  bool any = false;
  for (const std::string& e : exprs) any = any || !e.empty();
  if (!any) return {};
  std::array<ScalarClosure, 3> fns;
  for (int i = 0; i < 3; ++i)
    fns[i] = exprs[i].empty()
                 ? ScalarClosure([](double, double) { return 0.0; })
                 : parse_expression(exprs[i]);
  return [fns](double x, double y) {
    return Eigen::VectorXd(
        Eigen::Vector3d(fns[0](x, y), fns[1](x, y), fns[2](x, y)));
  };
}

VectorClosure grad_closure(const std::array<std::string, 6>& exprs) {
  bool any = false;
  for (const std::string& e : exprs) any = any || !e.empty();
  if (!any) return {};
  std::array<ScalarClosure, 6> fns;
  for (int i = 0; i < 6; ++i)
    fns[i] = exprs[i].empty()
                 ? ScalarClosure([](double, double) { return 0.0; })
                 : parse_expression(exprs[i]);
  return [fns](double x, double y) {
    Eigen::VectorXd g(6);
    for (int i = 0; i < 6; ++i) g(i) = fns[i](x, y);
    return g;
  };
}

EnergyParams build_params(const RunConfig& rc, const MetricField& g) {
  EnergyParams p;
  p.mu = rc.mu;
  p.lambda = rc.lambda;
  p.gamma0 = rc.gamma0;
  p.gamma1 = rc.gamma1;
  p.mode = rc.mode;
  p.metric = g;
  p.forcing = vector_closure(rc.forcing);
  if (rc.mode == BoundaryMode::Dirichlet) {
    p.bc_value = vector_closure(rc.bc_value);
    p.bc_grad = grad_closure(rc.bc_grad);
    const auto zero3 = [](double, double) {
      return Eigen::VectorXd(Eigen::Vector3d::Zero());
    };
    const auto zero6 = [](double, double) {
      return Eigen::VectorXd(Eigen::VectorXd::Zero(6));
    };
    if (!p.bc_value) p.bc_value = zero3;
    if (!p.bc_grad) p.bc_grad = zero6;
  }
  return p;
}

double resolve_sigma(const RunConfig& rc, const Mesh& m) {
  if (rc.sigma_rule == "zero") return 0.0;
  if (rc.sigma_rule == "h2") return m.h_max() * m.h_max();
  return rc.sigma_value;
}

// ||H_h(I_h y_g) - D^2 y_g||_L2 against the analytic immersion
double hessian_interp_error(const LiftingAssembly& a, const MetricField& g,
                            const DGField& interp) {
  const DGSpace& s = *interp.space;
  const DiscreteHessianField hess = discrete_hessian(a, interp);
  double acc = 0.0;
  for (int e = 0; e < s.mesh->num_elements(); ++e) {
    const ElemGeom& eg = s.geom[e];
    for (int q = 0; q < eg.qpts.rows(); ++q) {
      const Eigen::Matrix3d d2 =
          g.immersion_hess(eg.qpts(q, 0), eg.qpts(q, 1));
      // columns of d2: d11 y, d12 y, d22 y; hessian layout comp*4 + 2i+j
      double diff = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double h11 = hess.vals[e](q, c * 4 + 0) - d2(c, 0);
        const double h12 = hess.vals[e](q, c * 4 + 1) - d2(c, 1);
        const double h21 = hess.vals[e](q, c * 4 + 2) - d2(c, 1);
        const double h22 = hess.vals[e](q, c * 4 + 3) - d2(c, 2);
        diff += h11 * h11 + h12 * h12 + h21 * h21 + h22 * h22;
      }
      acc += eg.qw(q) * diff;
    }
  }
  return std::sqrt(acc);
}

RunSummary pipeline_on_mesh(const RunConfig& rc, Mesh mesh,
                            const std::string& out_dir, StudyRow* row) {
  const auto t0 = std::chrono::steady_clock::now();

  DGSpace space(mesh, rc.degree);
  const Skeleton skel = rc.mode == BoundaryMode::Dirichlet
                            ? Skeleton::Active
                            : Skeleton::Interior;
  LiftingAssembly assembly(space, rc.degree, rc.degree, skel);
  const MetricField g = build_metric(rc);
  check_metric_spd(g, space);
  const EnergyParams params = build_params(rc, g);

  DGField y0;
  if (rc.mode == BoundaryMode::Dirichlet) {
    BilaplacianParams bp;
    bp.gamma0 = rc.gamma0_hat;
    bp.gamma1 = rc.gamma1_hat;
    bp.value = params.bc_value;
    bp.grad = params.bc_grad;
    y0 = bilaplacian_init(bp, assembly);
  } else {
    y0 = flat_start(g, space);
  }

  PreprocessConfig pc;
  pc.metric = g;
  pc.sigma_h = resolve_sigma(rc, mesh);
  pc.tau = rc.pre_tau;
  pc.adaptive = rc.pre_adaptive;
  pc.stop_factor = rc.stop_factor;
  pc.abs_tol = rc.pre_abs_tol;
  pc.max_steps = rc.pre_max_steps;
  pc.cp = rc.cp;
  pc.cpt = rc.cpt;
  pc.mode = rc.mode;
  pc.samples = rc.samples;
  pc.seed = rc.seed + 1;
  const PreprocessState pre = run_preprocess(pc, assembly, y0);

  FlowConfig fc;
  fc.tau = rc.tau_rule == "h" ? 0.0 : rc.tau_value;
  fc.tol_increment = rc.flow_tol;
  fc.max_steps = rc.flow_max_steps;
  fc.eps0 = rc.epsilon0;
  const FlowState flow = run_main_flow(fc, params, assembly, pre.y);
  const CertificateReport certs =
      flow_certificates(params, assembly, flow, rc.seed + 777);

  RunSummary s;
  s.metric_name = rc.g11.empty() ? rc.metric_name : "custom";
  s.cells = mesh.num_elements();
  s.degree = rc.degree;
  s.h_max = mesh.h_max();
  s.h_min = mesh.h_min();
  s.sigma_h = pc.sigma_h;
  s.pre_steps = static_cast<int>(pre.log.size()) - 1;
  s.pre_converged = pre.converged;
  s.pre_stretching = pre.final_energies.stretching;
  s.pre_bending = pre.final_energies.bending;
  s.pre_defect = pre.defect;
  s.main_steps = static_cast<int>(flow.log.size()) - 1;
  s.main_converged = flow.converged;
  s.energy0 = flow.energy0;
  s.final_energy = flow.log.back().energy;
  s.final_stretching = flow.log.back().stretching;
  s.final_bending = flow.log.back().bending;
  s.defect0 = flow.defect0;
  s.final_defect = flow.log.back().defect;
  s.certificates = certs;
  s.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  if (row) {
    row->h_max = s.h_max;
    row->pre_steps = s.pre_steps;
    row->main_steps = s.main_steps;
    row->final_energy = s.final_energy;
    row->final_defect = s.final_defect;
    row->certificates_passed = certs.passed;
    if (g.has_immersion()) {
      const DGField interp = interpolate(space, 3, [&](double x, double y) {
        return Eigen::VectorXd(g.immersion(x, y));
      });
      row->hessian_error = hessian_interp_error(assembly, g, interp);
      row->interp_defect = metric_defect(interp, g);
      row->interp_energy = energy_Eh(params, assembly, interp).total;
    }
  }

  if (!out_dir.empty()) {
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    write_pre_steps_csv((dir / "steps_pre.csv").string(), pre.log);
    write_steps_csv((dir / "steps.csv").string(), flow.log);
    write_surface_vtk((dir / "surface_0.vtk").string(), g, assembly, y0);
    write_surface_vtk((dir / "surface_1.vtk").string(), g, assembly, pre.y);
    write_surface_vtk((dir / "surface_2.vtk").string(), g, assembly, flow.y);
    write_certificates_json((dir / "certificates.json").string(), certs);
    write_summary_json((dir / "summary.json").string(), rc, s);
  }
  return s;
}

}  // namespace

RunSummary run_pipeline(const RunConfig& config, bool write_outputs) {
  return pipeline_on_mesh(config, config.mesh.build(),
                          write_outputs ? config.output_dir : std::string(),
                          nullptr);
}

RunSummary run(const RunConfig& config) { return run_pipeline(config, true); }

std::vector<StudyRow> refinement_study(const RunConfig& config, int levels) {
  if (levels < 2) throw ConfigError("study: levels must be at least 2");
  std::vector<StudyRow> rows;
  Mesh mesh = config.mesh.build();
  for (int l = 0; l < levels; ++l) {
    if (l > 0) mesh = mesh.refined();
    StudyRow row;
    row.level = l;
    const std::string dir =
        config.output_dir + "/level" + std::to_string(l);
    pipeline_on_mesh(config, mesh, dir, &row);
    rows.push_back(row);
  }
  write_study_json(config.output_dir + "/study.json", config, rows);
  return rows;
}

std::vector<double> study_rates(const std::vector<StudyRow>& rows,
                                double StudyRow::*column) {
  std::vector<double> rates;
  for (std::size_t l = 0; l + 1 < rows.size(); ++l) {
    const double a = rows[l].*column;
    const double b = rows[l + 1].*column;
    const double ha = rows[l].h_max;
    const double hb = rows[l + 1].h_max;
    rates.push_back(a > 0.0 && b > 0.0 && ha > hb
                        ? std::log(a / b) / std::log(ha / hb)
                        : 0.0);
  }
  return rates;
}

}  // namespace ldg
