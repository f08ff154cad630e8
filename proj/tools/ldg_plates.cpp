#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ldg/app.hpp"
#include "ldg/lifting.hpp"

namespace {

void print_certificates(const ldg::CertificateReport& rep) {
  for (const ldg::CertificateEntry& e : rep.entries) {
    if (e.skipped)
      std::printf("  %-20s skipped (%s)\n", e.name.c_str(), e.detail.c_str());
    else
      std::printf("  %-20s %s (value %.3e, bound %.3e)\n", e.name.c_str(),
                  e.passed ? "pass" : "FAIL", e.value, e.bound);
  }
  if (rep.beta_h >= 0.0) std::printf("  inf-sup beta_h      %.4f\n", rep.beta_h);
}

void print_summary(const ldg::RunSummary& s) {
  std::printf("mesh: %d cells, h_max %.4f, degree %d, metric %s\n", s.cells,
              s.h_max, s.degree, s.metric_name.c_str());
  std::printf("preprocess: %d steps%s, E_s %.6e, E_b %.6e, D_h %.6e\n",
              s.pre_steps, s.pre_converged ? "" : " (not converged)",
              s.pre_stretching, s.pre_bending, s.pre_defect);
  std::printf("main flow:  %d steps%s, E_h %.6e -> %.6e, D_h %.6e -> %.6e\n",
              s.main_steps, s.main_converged ? "" : " (not converged)",
              s.energy0, s.final_energy, s.defect0, s.final_defect);
  std::printf("certificates: %s\n",
              s.certificates.passed ? "all pass" : "FAILED");
  print_certificates(s.certificates);
  std::printf("wall time: %.2f s\n", s.wall_seconds);
}

int run_command(const std::string& config_path) {
  const ldg::RunConfig rc = ldg::RunConfig::from_file(config_path);
  const ldg::RunSummary s = ldg::run(rc);
  print_summary(s);
  std::printf("outputs written to %s\n", rc.output_dir.c_str());
  return s.certificates.passed ? 0 : 1;
}

int study_command(const std::string& config_path, int levels) {
  const ldg::RunConfig rc = ldg::RunConfig::from_file(config_path);
  const std::vector<ldg::StudyRow> rows = ldg::refinement_study(rc, levels);
  const bool immersion = rows.front().hessian_error >= 0.0;

  std::printf("level   h_max      pre  main  final E_h     final D_h");
  if (immersion) std::printf("     H_h err      interp D_h   interp E_h");
  std::printf("  certs\n");
  for (const ldg::StudyRow& r : rows) {
    std::printf("%5d   %.6f %4d %5d  %.6e  %.6e", r.level, r.h_max,
                r.pre_steps, r.main_steps, r.final_energy, r.final_defect);
    if (immersion)
      std::printf("  %.6e %.6e %.6e", r.hessian_error, r.interp_defect,
                  r.interp_energy);
    std::printf("  %s\n", r.certificates_passed ? "pass" : "FAIL");
  }
  if (!immersion)
    std::printf("(no analytic immersion for this metric: interpolant "
                "columns omitted)\n");

  auto print_rates = [&](const char* name, double ldg::StudyRow::*col) {
    std::printf("%s rates:", name);
    for (const double r : ldg::study_rates(rows, col)) std::printf(" %.3f", r);
    std::printf("\n");
  };
  print_rates("final defect", &ldg::StudyRow::final_defect);
  if (immersion) {
    print_rates("hessian error", &ldg::StudyRow::hessian_error);
    print_rates("interp defect", &ldg::StudyRow::interp_defect);
  }
  std::printf("study table written to %s/study.json\n", rc.output_dir.c_str());

  bool all = true;
  for (const ldg::StudyRow& r : rows) all = all && r.certificates_passed;
  return all ? 0 : 1;
}

int mesh_command(const std::string& spec, const std::string& out) {
  const ldg::Mesh m = ldg::mesh_from_spec(spec);
  m.save(out);
  std::printf("wrote %d cells, %d edges to %s\n", m.num_elements(),
              static_cast<int>(m.edges.size()), out.c_str());
  return 0;
}

int check_command(const std::string& config_path) {
  const ldg::RunConfig rc = ldg::RunConfig::from_file(config_path);

  // space properties at the configured discretization
  {
    ldg::Mesh mesh = rc.mesh.build();
    ldg::DGSpace space(mesh, rc.degree);
    const ldg::Skeleton skel = rc.mode == ldg::BoundaryMode::Dirichlet
                                   ? ldg::Skeleton::Active
                                   : ldg::Skeleton::Interior;
    ldg::LiftingAssembly assembly(space, rc.degree, rc.degree, skel);
    const ldg::EquivalenceReport eq = ldg::seminorm_equivalence_check(
        assembly, rc.gamma0, rc.gamma1, 50, rc.seed);
    std::printf("  %-20s %s (ratios in [%.3e, %.3e])\n",
                "seminorm_equivalence", eq.c_lower > 0.0 ? "pass" : "FAIL",
                eq.c_lower, eq.c_upper);
    if (eq.c_lower <= 0.0) return 1;
  }

  const ldg::RunSummary s = ldg::run_pipeline(rc, false);
  print_certificates(s.certificates);
  return s.certificates.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  ldg::apply_thread_cap();

  CLI::App app{"bending energy minimization for prestrained plates\n"
               "exit codes: 0 all certificates pass, 1 certificate failure, "
               "2 errors"};
  app.require_subcommand(1);
  app.footer(ldg::config_reference());

  std::string config_path, mesh_spec, mesh_out;
  int levels = 3;

  CLI::App* cmd_run = app.add_subcommand("run", "single flow pipeline");
  cmd_run->add_option("config", config_path, "config file")->required();

  CLI::App* cmd_study =
      app.add_subcommand("study", "refinement study over uniform levels");
  cmd_study->add_option("config", config_path, "config file")->required();
  cmd_study->add_option("--levels", levels, "refinement levels (default 3)");

  CLI::App* cmd_mesh =
      app.add_subcommand("mesh", "build a structured mesh file");
  cmd_mesh
      ->add_option("spec", mesh_spec,
                   "kind:NXxNY[:x0,y0,x1,y1][:dirichlet=sides]")
      ->required();
  cmd_mesh->add_option("-o,--output", mesh_out, "output path")->required();

  CLI::App* cmd_check = app.add_subcommand(
      "check", "run the property and certificate suite without outputs");
  cmd_check->add_option("config", config_path, "config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) return run_command(config_path);
    if (cmd_study->parsed()) return study_command(config_path, levels);
    if (cmd_mesh->parsed()) return mesh_command(mesh_spec, mesh_out);
    if (cmd_check->parsed()) return check_command(config_path);
  } catch (const ldg::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
