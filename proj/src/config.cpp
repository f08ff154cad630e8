#include <charconv>
#include <fstream>
#include <sstream>

#include "ldg/app.hpp"
#include "ldg/expression.hpp"

namespace ldg {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t p = s.find(sep, start);
    if (p == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, p - start));
    start = p + 1;
  }
}

double parse_number(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("config: key '" + key + "' expects a number, got '" +
                      text + "'");
  return v;
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text,
                                 const std::string& origin) {
  KeyValueFile kv;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config: malformed section header at line " +
                          std::to_string(lineno) + " of " + origin);
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("config: empty section name at line " +
                          std::to_string(lineno) + " of " + origin);
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected 'key = value' at line " +
                        std::to_string(lineno) + " of " + origin);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config: empty key at line " +
                        std::to_string(lineno) + " of " + origin);
    const std::string full = section.empty() ? key : section + "." + key;
    if (kv.entries.count(full))
      throw ConfigError("config: duplicate key '" + full + "' at line " +
                        std::to_string(lineno) + " of " + origin);
    kv.entries[full] = value;
    kv.consumed[full] = false;
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

bool KeyValueFile::has(const std::string& key) const {
  return entries.count(key) != 0;
}

std::string KeyValueFile::get(const std::string& key,
                              const std::string& fallback) const {
  auto it = entries.find(key);
  if (it == entries.end()) return fallback;
  consumed[key] = true;
  return it->second;
}

double KeyValueFile::get_number(const std::string& key,
                                double fallback) const {
  auto it = entries.find(key);
  if (it == entries.end()) return fallback;
  consumed[key] = true;
  return parse_number(key, it->second);
}

long KeyValueFile::get_integer(const std::string& key, long fallback) const {
  auto it = entries.find(key);
  if (it == entries.end()) return fallback;
  consumed[key] = true;
  long v = 0;
  const char* begin = it->second.data();
  const char* end = begin + it->second.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("config: key '" + key + "' expects an integer, got '" +
                      it->second + "'");
  return v;
}

bool KeyValueFile::get_flag(const std::string& key, bool fallback) const {
  auto it = entries.find(key);
  if (it == entries.end()) return fallback;
  consumed[key] = true;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: key '" + key + "' expects a boolean, got '" + v +
                    "'");
}

void KeyValueFile::check_all_consumed() const {
  std::string leftovers;
  for (const auto& [key, value] : entries) {
    (void)value;
    if (!consumed.at(key)) {
      if (!leftovers.empty()) leftovers += ", ";
      leftovers += key;
    }
  }
  if (!leftovers.empty())
    throw ConfigError("config: unknown key(s): " + leftovers);
}

Mesh MeshSpec::build() const {
  Mesh m;
  if (!file.empty()) {
    m = Mesh::load(file);
  } else {
    if (nx < 1 || ny < 1)
      throw ConfigError("config: mesh.nx and mesh.ny must be at least 1");
    if (x1 <= x0 || y1 <= y0)
      throw ConfigError("config: mesh bounds must satisfy x0<x1, y0<y1");
    m = Mesh::structured(kind, nx, ny, x0, y0, x1, y1);
  }
  if (!dirichlet_sides.empty()) mark_dirichlet_sides(m, dirichlet_sides);
  return m;
}

RunConfig RunConfig::from_file(const std::string& path) {
  return from_kv(KeyValueFile::load(path));
}

RunConfig RunConfig::from_kv(const KeyValueFile& kv) {
  RunConfig rc;

  rc.mesh.file = kv.get("mesh.file", "");
  const std::string kind = kv.get("mesh.kind", "quad");
  if (kind == "quad")
    rc.mesh.kind = CellKind::Quad;
  else if (kind == "tri")
    rc.mesh.kind = CellKind::Tri;
  else
    throw ConfigError("config: mesh.kind must be quad or tri, got '" + kind +
                      "'");
  rc.mesh.nx = static_cast<int>(kv.get_integer("mesh.nx", 8));
  rc.mesh.ny = static_cast<int>(kv.get_integer("mesh.ny", 8));
  rc.mesh.x0 = kv.get_number("mesh.x0", 0.0);
  rc.mesh.y0 = kv.get_number("mesh.y0", 0.0);
  rc.mesh.x1 = kv.get_number("mesh.x1", 1.0);
  rc.mesh.y1 = kv.get_number("mesh.y1", 1.0);
  const std::string sides = kv.get("mesh.dirichlet", "");
  if (!sides.empty())
    for (const std::string& s : split(sides, ','))
      rc.mesh.dirichlet_sides.push_back(trim(s));

  rc.degree = static_cast<int>(kv.get_integer("space.degree", 2));

  rc.metric_name = kv.get("metric.name", "identity");
  rc.metric_beta = kv.get_number("metric.beta", 1.0);
  rc.g11 = kv.get("metric.g11", "");
  rc.g12 = kv.get("metric.g12", "");
  rc.g22 = kv.get("metric.g22", "");

  rc.mu = kv.get_number("params.mu", 1.0);
  rc.lambda = kv.get_number("params.lambda", 0.0);
  rc.gamma0 = kv.get_number("params.gamma0", 1.0);
  rc.gamma1 = kv.get_number("params.gamma1", 1.0);
  rc.gamma0_hat = kv.get_number("params.gamma0_hat", 1.0);
  rc.gamma1_hat = kv.get_number("params.gamma1_hat", 1.0);
  rc.epsilon0 = kv.get_number("params.epsilon0", 1.0);

  const std::string mode = kv.get("boundary.mode", "free");
  if (mode == "free")
    rc.mode = BoundaryMode::Free;
  else if (mode == "dirichlet")
    rc.mode = BoundaryMode::Dirichlet;
  else
    throw ConfigError(
        "config: boundary.mode must be free or dirichlet, got '" + mode +
        "'");
  const char* value_keys[3] = {"boundary.value1", "boundary.value2",
                               "boundary.value3"};
  const char* grad_keys[6] = {"boundary.grad11", "boundary.grad12",
                              "boundary.grad21", "boundary.grad22",
                              "boundary.grad31", "boundary.grad32"};
  for (int i = 0; i < 3; ++i) rc.bc_value[i] = kv.get(value_keys[i], "");
  for (int i = 0; i < 6; ++i) rc.bc_grad[i] = kv.get(grad_keys[i], "");

  rc.forcing[0] = kv.get("forcing.f1", "");
  rc.forcing[1] = kv.get("forcing.f2", "");
  rc.forcing[2] = kv.get("forcing.f3", "");

  const std::string sigma = kv.get("preprocess.sigma", "zero");
  if (sigma == "zero") {
    rc.sigma_rule = "zero";
  } else if (sigma == "h2") {
    rc.sigma_rule = "h2";
  } else {
    rc.sigma_rule = "explicit";
    rc.sigma_value = parse_number("preprocess.sigma", sigma);
  }
  rc.pre_tau = kv.get_number("preprocess.tau", 1.0);
  rc.pre_adaptive = kv.get_flag("preprocess.adaptive", true);
  rc.stop_factor = kv.get_number("preprocess.stop_factor", 1.0);
  rc.pre_abs_tol = kv.get_number("preprocess.abs_tol", 1e-10);
  rc.pre_max_steps =
      static_cast<int>(kv.get_integer("preprocess.max_steps", 200));
  rc.cp = kv.get_number("preprocess.cp", 0.0);
  rc.cpt = kv.get_number("preprocess.cpt", 0.0);
  rc.samples = static_cast<int>(kv.get_integer("preprocess.samples", 200));

  const std::string tau = kv.get("flow.tau", "h");
  if (tau == "h") {
    rc.tau_rule = "h";
  } else {
    rc.tau_rule = "explicit";
    rc.tau_value = parse_number("flow.tau", tau);
  }
  rc.flow_tol = kv.get_number("flow.tol", 0.0);
  rc.flow_max_steps = static_cast<int>(kv.get_integer("flow.max_steps", 200));

  rc.output_dir = kv.get("output.dir", "out");
  rc.seed = static_cast<std::uint64_t>(kv.get_integer("diagnostics.seed", 0));

  kv.check_all_consumed();
  rc.validate();
  return rc;
}

void RunConfig::validate() const {
  if (degree < 2 || degree > 4)
    throw ConfigError("config: space.degree must be in [2, 4]");
  if (mu <= 0.0) throw ConfigError("config: params.mu must be positive");
  if (lambda < 0.0)
    throw ConfigError("config: params.lambda must be nonnegative");
  if (gamma0 <= 0.0 || gamma1 <= 0.0)
    throw ConfigError("config: params.gamma0 and params.gamma1 must be "
                      "positive");
  if (gamma0_hat <= 0.0 || gamma1_hat <= 0.0)
    throw ConfigError("config: params.gamma0_hat and params.gamma1_hat must "
                      "be positive");
  if (epsilon0 < 0.0)
    throw ConfigError("config: params.epsilon0 must be nonnegative");

  const bool custom = !g11.empty() || !g12.empty() || !g22.empty();
  if (custom) {
    if (g11.empty() || g22.empty())
      throw ConfigError(
          "config: custom metrics need both metric.g11 and metric.g22");
    if (metric_name != "identity")
      throw ConfigError(
          "config: metric.name cannot be combined with g11/g12/g22");
  } else if (metric_name != "identity" && metric_name != "cylinder" &&
             metric_name != "stretched") {
    throw ConfigError(
        "config: metric.name must be identity, cylinder or stretched, got '" +
        metric_name + "'");
  }

  if (mode == BoundaryMode::Free) {
    for (const std::string& e : bc_value)
      if (!e.empty())
        throw ConfigError(
            "config: boundary values set but boundary.mode is free");
    for (const std::string& e : bc_grad)
      if (!e.empty())
        throw ConfigError(
            "config: boundary gradients set but boundary.mode is free");
  } else if (mesh.file.empty() && mesh.dirichlet_sides.empty()) {
    throw ConfigError(
        "config: dirichlet mode on a structured mesh needs mesh.dirichlet");
  }

  if (sigma_rule == "explicit" && sigma_value < 0.0)
    throw ConfigError("config: preprocess.sigma must be nonnegative");
  const bool sigma_positive =
      sigma_rule == "h2" || (sigma_rule == "explicit" && sigma_value > 0.0);
  if (sigma_positive && mode == BoundaryMode::Dirichlet)
    throw ConfigError(
        "config: preprocess.sigma > 0 requires boundary.mode = free");
  if (pre_tau <= 0.0)
    throw ConfigError("config: preprocess.tau must be positive");
  if (stop_factor <= 0.0)
    throw ConfigError("config: preprocess.stop_factor must be positive");
  if (pre_abs_tol <= 0.0)
    throw ConfigError("config: preprocess.abs_tol must be positive");
  if (pre_max_steps < 0 || flow_max_steps < 0)
    throw ConfigError("config: step limits must be nonnegative");
  if (samples < 1)
    throw ConfigError("config: preprocess.samples must be at least 1");
  if (tau_rule == "explicit" && tau_value <= 0.0)
    throw ConfigError("config: flow.tau must be positive or 'h'");
  if (output_dir.empty())
    throw ConfigError("config: output.dir must not be empty");

  // every referenced expression must parse up front
  auto probe = [](const std::string& key, const std::string& text) {
    if (text.empty()) return;
    try {
      parse_expression(text);
    } catch (const Error& err) {
      throw ConfigError("config: key '" + key + "': " + err.what());
    }
  };
  probe("metric.g11", g11);
  probe("metric.g12", g12);
  probe("metric.g22", g22);
  const char* value_keys[3] = {"boundary.value1", "boundary.value2",
                               "boundary.value3"};
  const char* grad_keys[6] = {"boundary.grad11", "boundary.grad12",
                              "boundary.grad21", "boundary.grad22",
                              "boundary.grad31", "boundary.grad32"};
  for (int i = 0; i < 3; ++i) probe(value_keys[i], bc_value[i]);
  for (int i = 0; i < 6; ++i) probe(grad_keys[i], bc_grad[i]);
  probe("forcing.f1", forcing[0]);
  probe("forcing.f2", forcing[1]);
  probe("forcing.f3", forcing[2]);
}

std::string config_reference() {
  return R"(config file keys (flat key = value with [section] headers, # comments)

[mesh]
  file            load a saved mesh instead of building one
  kind            quad | tri                              (default quad)
  nx, ny          structured resolution                   (default 8, 8)
  x0, y0, x1, y1  domain bounds                           (default unit square)
  dirichlet       comma list of left,right,bottom,top marked as Dirichlet
[space]
  degree          polynomial degree k in [2, 4]           (default 2)
[metric]
  name            identity | cylinder | stretched         (default identity)
  beta            stretched parameter                     (default 1.0)
  g11, g12, g22   expressions over x1, x2 for a custom metric (g12 optional)
[params]
  mu, lambda      isometric bending coefficients          (default 1.0, 0.0)
  gamma0, gamma1  jump penalty weights                    (default 1.0)
  gamma0_hat, gamma1_hat   bi-Laplacian initializer weights (default 1.0)
  epsilon0        defect budget for the certificates      (default 1.0)
[boundary]
  mode            free | dirichlet                        (default free)
  value1..value3  Dirichlet data components (expressions, default 0)
  grad11..grad32  Dirichlet data gradient, gradCD = d_D y_C (default 0)
[forcing]
  f1, f2, f3      load components (expressions, default 0; free mode
                  requires zero mean)
[preprocess]
  sigma           zero | h2 | explicit value              (default zero)
  tau             step size cap                           (default 1.0)
  adaptive        apply the analytic step rule            (default true)
  stop_factor     stop when E_p <= stop_factor * sigma    (default 1.0)
  abs_tol         sigma = 0 stop on stretching energy     (default 1e-10)
  max_steps       preprocessing step limit                (default 200)
  cp, cpt         step rule constants, <= 0 means estimate (default 0)
  samples         fields sampled per constant estimate    (default 200)
[flow]
  tau             h (mesh size) | explicit value          (default h)
  tol             increment stop, <= 0 means scaled default
  max_steps       main flow step limit                    (default 200)
[output]
  dir             output directory                        (default out)
[diagnostics]
  seed            seed for randomized certificates        (default 0)
)";
}

Mesh mesh_from_spec(const std::string& spec) {
  const std::vector<std::string> parts = split(spec, ':');
  if (parts.size() < 2)
    throw ConfigError("mesh spec: expected kind:NXxNY[...], got '" + spec +
                      "'");
  MeshSpec ms;
  if (parts[0] == "quad")
    ms.kind = CellKind::Quad;
  else if (parts[0] == "tri")
    ms.kind = CellKind::Tri;
  else
    throw ConfigError("mesh spec: kind must be quad or tri, got '" +
                      parts[0] + "'");
  const std::size_t x = parts[1].find('x');
  if (x == std::string::npos)
    throw ConfigError("mesh spec: expected NXxNY, got '" + parts[1] + "'");
  ms.nx = static_cast<int>(
      parse_number("mesh spec nx", trim(parts[1].substr(0, x))));
  ms.ny = static_cast<int>(
      parse_number("mesh spec ny", trim(parts[1].substr(x + 1))));
  for (std::size_t i = 2; i < parts.size(); ++i) {
    if (parts[i].rfind("dirichlet=", 0) == 0) {
      for (const std::string& s : split(parts[i].substr(10), ','))
        ms.dirichlet_sides.push_back(trim(s));
    } else {
      const std::vector<std::string> b = split(parts[i], ',');
      if (b.size() != 4)
        throw ConfigError("mesh spec: bounds need x0,y0,x1,y1, got '" +
                          parts[i] + "'");
      ms.x0 = parse_number("mesh spec x0", trim(b[0]));
      ms.y0 = parse_number("mesh spec y0", trim(b[1]));
      ms.x1 = parse_number("mesh spec x1", trim(b[2]));
      ms.y1 = parse_number("mesh spec y1", trim(b[3]));
    }
  }
  return ms.build();
}

}  // namespace ldg
