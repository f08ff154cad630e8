#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "ldg/app.hpp"
#include "ldg/lifting.hpp"

namespace ldg {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("output: cannot write '" + path + "'");
  return out;
}

// shortest round-trip decimal so rewrites are bit-identical
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json certificates_json(const CertificateReport& rep) {
  json entries = json::array();
  for (const CertificateEntry& e : rep.entries)
    entries.push_back({{"name", e.name},
                       {"passed", e.passed},
                       {"skipped", e.skipped},
                       {"value", e.value},
                       {"bound", e.bound},
                       {"detail", e.detail}});
  return {{"passed", rep.passed},
          {"beta_h", rep.beta_h},
          {"poincare", rep.poincare_c},
          {"entries", entries}};
}

json config_json(const RunConfig& rc) {
  json mesh = {{"kind", rc.mesh.kind == CellKind::Quad ? "quad" : "tri"},
               {"nx", rc.mesh.nx},
               {"ny", rc.mesh.ny},
               {"bounds", {rc.mesh.x0, rc.mesh.y0, rc.mesh.x1, rc.mesh.y1}}};
  if (!rc.mesh.file.empty()) mesh["file"] = rc.mesh.file;
  if (!rc.mesh.dirichlet_sides.empty())
    mesh["dirichlet"] = rc.mesh.dirichlet_sides;

  json metric = {{"name", rc.metric_name}};
  if (rc.metric_name == "stretched") metric["beta"] = rc.metric_beta;
  if (!rc.g11.empty())
    metric = {{"g11", rc.g11},
              {"g12", rc.g12.empty() ? "0" : rc.g12},
              {"g22", rc.g22}};

  json j = {{"mesh", mesh},
            {"degree", rc.degree},
            {"metric", metric},
            {"params",
             {{"mu", rc.mu},
              {"lambda", rc.lambda},
              {"gamma0", rc.gamma0},
              {"gamma1", rc.gamma1},
              {"gamma0_hat", rc.gamma0_hat},
              {"gamma1_hat", rc.gamma1_hat},
              {"epsilon0", rc.epsilon0}}},
            {"boundary",
             {{"mode",
               rc.mode == BoundaryMode::Free ? "free" : "dirichlet"}}},
            {"preprocess",
             {{"sigma_rule", rc.sigma_rule},
              {"sigma_value", rc.sigma_value},
              {"tau", rc.pre_tau},
              {"adaptive", rc.pre_adaptive},
              {"stop_factor", rc.stop_factor},
              {"abs_tol", rc.pre_abs_tol},
              {"max_steps", rc.pre_max_steps},
              {"cp", rc.cp},
              {"cpt", rc.cpt},
              {"samples", rc.samples}}},
            {"flow",
             {{"tau_rule", rc.tau_rule},
              {"tau_value", rc.tau_value},
              {"tol", rc.flow_tol},
              {"max_steps", rc.flow_max_steps}}},
            {"seed", rc.seed}};
  for (int i = 0; i < 3; ++i)
    if (!rc.bc_value[i].empty())
      j["boundary"]["value"][std::to_string(i + 1)] = rc.bc_value[i];
  for (int i = 0; i < 6; ++i)
    if (!rc.bc_grad[i].empty())
      j["boundary"]["grad"][std::to_string(i / 2 + 1) +
                            std::to_string(i % 2 + 1)] = rc.bc_grad[i];
  for (int i = 0; i < 3; ++i)
    if (!rc.forcing[i].empty())
      j["forcing"][std::string("f") + std::to_string(i + 1)] = rc.forcing[i];
  return j;
}

}  // namespace

void write_steps_csv(const std::string& path,
                     const std::vector<FlowStepRow>& log) {
  std::ofstream out = open_out(path);
  out << "step,E_h,E_s,E_b,D_h,incr_norm,grad_incr_sq,tau,kkt_residual,"
         "constraint_residual,mean1,mean2,mean3\n";
  for (const FlowStepRow& r : log) {
    out << r.step << ',' << num(r.energy) << ',' << num(r.stretching) << ','
        << num(r.bending) << ',' << num(r.defect) << ',' << num(r.incr_norm)
        << ',' << num(r.grad_incr_sq) << ',' << num(r.tau) << ','
        << num(r.kkt_residual) << ',' << num(r.constraint_residual) << ','
        << num(r.mean(0)) << ',' << num(r.mean(1)) << ',' << num(r.mean(2))
        << '\n';
  }
}

void write_pre_steps_csv(const std::string& path,
                         const std::vector<PreStepRow>& log) {
  std::ofstream out = open_out(path);
  out << "step,E_s,E_b,E_p,incr_norm,tau,c_h,halvings\n";
  for (const PreStepRow& r : log) {
    out << r.step << ',' << num(r.stretching) << ',' << num(r.bending) << ','
        << num(r.total) << ',' << num(r.incr_norm) << ',' << num(r.tau) << ','
        << num(r.c_h) << ',' << r.halvings << '\n';
  }
}

void write_certificates_json(const std::string& path,
                             const CertificateReport& rep) {
  std::ofstream out = open_out(path);
  out << certificates_json(rep).dump(2) << '\n';
}

void write_summary_json(const std::string& path, const RunConfig& config,
                        const RunSummary& summary) {
  json j = {{"config", config_json(config)},
            {"mesh",
             {{"cells", summary.cells},
              {"h_max", summary.h_max},
              {"h_min", summary.h_min}}},
            {"degree", summary.degree},
            {"sigma_h", summary.sigma_h},
            {"preprocess",
             {{"steps", summary.pre_steps},
              {"converged", summary.pre_converged},
              {"stretching", summary.pre_stretching},
              {"bending", summary.pre_bending},
              {"defect", summary.pre_defect}}},
            {"flow",
             {{"steps", summary.main_steps},
              {"converged", summary.main_converged},
              {"energy0", summary.energy0},
              {"final_energy", summary.final_energy},
              {"final_stretching", summary.final_stretching},
              {"final_bending", summary.final_bending},
              {"defect0", summary.defect0},
              {"final_defect", summary.final_defect}}},
            {"certificates", certificates_json(summary.certificates)},
            {"wall_seconds", summary.wall_seconds}};
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_study_json(const std::string& path, const RunConfig& config,
                      const std::vector<StudyRow>& rows) {
  json levels = json::array();
  for (const StudyRow& r : rows) {
    json row = {{"level", r.level},
                {"h_max", r.h_max},
                {"pre_steps", r.pre_steps},
                {"main_steps", r.main_steps},
                {"final_energy", r.final_energy},
                {"final_defect", r.final_defect},
                {"certificates_passed", r.certificates_passed}};
    if (r.hessian_error >= 0.0) {
      row["hessian_error"] = r.hessian_error;
      row["interp_defect"] = r.interp_defect;
      row["interp_energy"] = r.interp_energy;
    }
    levels.push_back(row);
  }
  auto rates = [&](double StudyRow::*col) {
    json out = json::array();
    for (const double r : study_rates(rows, col)) out.push_back(r);
    return out;
  };
  json j = {{"config", config_json(config)}, {"levels", levels}};
  j["rates"] = {{"final_defect", rates(&StudyRow::final_defect)}};
  if (!rows.empty() && rows.front().hessian_error >= 0.0) {
    j["rates"]["hessian_error"] = rates(&StudyRow::hessian_error);
    j["rates"]["interp_defect"] = rates(&StudyRow::interp_defect);
  }
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_surface_vtk(const std::string& path, const MetricField& g,
                       const LiftingAssembly& a, const DGField& y) {
  const DGSpace& s = *y.space;
  const Mesh& m = *s.mesh;
  const bool quad = m.kind == CellKind::Quad;
  const int nc = quad ? 4 : 3;
  const int ne = m.num_elements();

  Eigen::MatrixX2d corners(nc, 2);
  if (quad)
    corners << 0, 0, 1, 0, 1, 1, 0, 1;
  else
    corners << 0, 0, 1, 0, 0, 1;

  // elementwise mean bending energy density |H_h|^2 / |T|
  const DiscreteHessianField hess = discrete_hessian(a, y);
  Eigen::VectorXd bend(ne);
  for (int e = 0; e < ne; ++e) {
    const Eigen::VectorXd& qw = s.geom[e].qw;
    double acc = 0.0;
    for (int q = 0; q < qw.size(); ++q)
      acc += qw(q) * hess.vals[e].row(q).squaredNorm();
    bend(e) = acc / m.element_area(e);
  }

  std::ofstream out = open_out(path);
  out << "# vtk DataFile Version 3.0\n"
      << "deformed surface\n"
      << "ASCII\n"
      << "DATASET UNSTRUCTURED_GRID\n";

  out << "POINTS " << nc * ne << " double\n";
  std::vector<double> defect(static_cast<std::size_t>(nc) * ne);
  for (int e = 0; e < ne; ++e) {
    const Evaluation ev = evaluate(y, e, corners);
    Eigen::MatrixX2d phys;
    s.geometry_at(e, corners, &phys, nullptr, nullptr);
    for (int c = 0; c < nc; ++c) {
      out << num(ev.value(c, 0)) << ' ' << num(ev.value(c, 1)) << ' '
          << num(ev.value(c, 2)) << '\n';
      Eigen::Matrix2d f = Eigen::Matrix2d::Zero();
      for (int comp = 0; comp < 3; ++comp) {
        const Eigen::RowVector2d dv = ev.grad[comp].row(c);
        f += dv.transpose() * dv;
      }
      defect[static_cast<std::size_t>(e) * nc + c] =
          (f - g.at(phys(c, 0), phys(c, 1))).norm();
    }
  }

  out << "CELLS " << ne << ' ' << ne * (nc + 1) << '\n';
  for (int e = 0; e < ne; ++e) {
    out << nc;
    for (int c = 0; c < nc; ++c) out << ' ' << e * nc + c;
    out << '\n';
  }
  out << "CELL_TYPES " << ne << '\n';
  for (int e = 0; e < ne; ++e) out << (quad ? 9 : 5) << '\n';

  out << "POINT_DATA " << nc * ne << '\n';
  out << "SCALARS defect_density double 1\nLOOKUP_TABLE default\n";
  for (const double v : defect) out << num(v) << '\n';
  out << "SCALARS bending_density double 1\nLOOKUP_TABLE default\n";
  for (int e = 0; e < ne; ++e)
    for (int c = 0; c < nc; ++c) out << num(bend(e)) << '\n';
}

}  // namespace ldg
