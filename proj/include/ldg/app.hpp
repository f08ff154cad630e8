#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "ldg/common.hpp"
#include "ldg/flows.hpp"

namespace ldg {

// Configuration problems get their own type so the CLI can map them to the
// dedicated exit code.
struct ConfigError : Error {
  using Error::Error;
};

// Flat "key = value" file with [section] headers and # comments. Keys are
// stored as "section.key". Reads track consumption so unknown keys can be
// reported as typos.
struct KeyValueFile {
  std::map<std::string, std::string> entries;
  mutable std::map<std::string, bool> consumed;

  static KeyValueFile parse(const std::string& text,
                            const std::string& origin);
  static KeyValueFile load(const std::string& path);

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_number(const std::string& key, double fallback) const;
  long get_integer(const std::string& key, long fallback) const;
  bool get_flag(const std::string& key, bool fallback) const;
  void check_all_consumed() const;  // throws ConfigError naming leftovers
};

struct MeshSpec {
  std::string file;  // when set, load instead of building structured
  CellKind kind = CellKind::Quad;
  int nx = 8, ny = 8;
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
  std::vector<std::string> dirichlet_sides;

  Mesh build() const;
};

// Everything a run needs, loadable from a config file. Expression-valued
// entries keep their source text so summaries echo the exact input.
struct RunConfig {
  MeshSpec mesh;
  int degree = 2;

  std::string metric_name = "identity";  // identity | cylinder | stretched
  double metric_beta = 1.0;              // stretched parameter
  std::string g11, g12, g22;             // custom metric expressions

  double mu = 1.0, lambda = 0.0;
  double gamma0 = 1.0, gamma1 = 1.0;
  double gamma0_hat = 1.0, gamma1_hat = 1.0;
  double epsilon0 = 1.0;

  BoundaryMode mode = BoundaryMode::Free;
  std::array<std::string, 3> bc_value;  // phi components
  std::array<std::string, 6> bc_grad;   // comp*2 + deriv layout
  std::array<std::string, 3> forcing;

  std::string sigma_rule = "zero";  // zero | h2 | explicit number
  double sigma_value = 0.0;
  double pre_tau = 1.0;
  bool pre_adaptive = true;
  double stop_factor = 1.0;
  double pre_abs_tol = 1e-10;
  int pre_max_steps = 200;
  double cp = 0.0, cpt = 0.0;  // <= 0: estimated
  int samples = 200;

  std::string tau_rule = "h";  // h | explicit number
  double tau_value = 0.0;
  double flow_tol = 0.0;  // <= 0: scaled default
  int flow_max_steps = 200;

  std::string output_dir = "out";
  std::uint64_t seed = 0;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_kv(const KeyValueFile& kv);
  void validate() const;  // invariants + all expressions parse
};

// One line per documented config key, shown by the CLI help.
std::string config_reference();

struct RunSummary {
  std::string metric_name;
  int cells = 0, degree = 0;
  double h_max = 0.0, h_min = 0.0;
  double sigma_h = 0.0;
  int pre_steps = 0, main_steps = 0;
  bool pre_converged = false, main_converged = false;
  double pre_stretching = 0.0, pre_bending = 0.0, pre_defect = 0.0;
  double energy0 = 0.0, final_energy = 0.0;
  double final_stretching = 0.0, final_bending = 0.0;
  double defect0 = 0.0, final_defect = 0.0;
  CertificateReport certificates;
  double wall_seconds = 0.0;
};

// Full pipeline: start state (bi-Laplacian solve under Dirichlet data,
// flat start otherwise), preprocessing, main flow, certificates, and the
// output files steps_pre.csv, steps.csv, surface_0/1/2.vtk, summary.json,
// certificates.json under config.output_dir.
RunSummary run(const RunConfig& config);

// Same pipeline without writing files; used by the check subcommand.
RunSummary run_pipeline(const RunConfig& config, bool write_outputs);

struct StudyRow {
  int level = 0;
  double h_max = 0.0;
  // interpolant columns, -1 when the metric has no analytic immersion
  double hessian_error = -1.0;
  double interp_defect = -1.0;
  double interp_energy = -1.0;
  // flow columns
  int pre_steps = 0, main_steps = 0;
  double final_energy = 0.0, final_defect = 0.0;
  bool certificates_passed = false;
};

// Uniformly refines the configured mesh `levels` times (levels >= 2),
// repeating the pipeline per level and measuring interpolant quantities
// against the analytic immersion when one exists. Writes study.json plus
// per-level run outputs into subdirectories of config.output_dir.
std::vector<StudyRow> refinement_study(const RunConfig& config, int levels);

// Empirical rate log2(v[l]/v[l+1]) table helper for the study printout.
std::vector<double> study_rates(const std::vector<StudyRow>& rows,
                                double StudyRow::*column);

// Output writers (legacy ASCII VTK, CSV logs, JSON summaries).
void write_steps_csv(const std::string& path,
                     const std::vector<FlowStepRow>& log);
void write_pre_steps_csv(const std::string& path,
                         const std::vector<PreStepRow>& log);
void write_certificates_json(const std::string& path,
                             const CertificateReport& rep);
void write_summary_json(const std::string& path, const RunConfig& config,
                        const RunSummary& summary);
void write_study_json(const std::string& path, const RunConfig& config,
                      const std::vector<StudyRow>& rows);

// Discontinuous deformed surface: corner nodal positions of y per element,
// with pointwise metric defect density and elementwise mean bending energy
// density as point data.
void write_surface_vtk(const std::string& path, const MetricField& g,
                       const LiftingAssembly& a, const DGField& y);

// "kind:NXxNY[:x0,y0,x1,y1][:dirichlet=side,side,...]" builder for the mesh
// subcommand, e.g. "quad:8x8" or "tri:4x4:0,0,2,1:dirichlet=left,right".
Mesh mesh_from_spec(const std::string& spec);

}  // namespace ldg
