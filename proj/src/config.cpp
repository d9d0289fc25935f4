#include "concentra/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace concentra {

namespace {

const std::map<std::string, std::set<std::string>>& key_registry() {
  static const std::map<std::string, std::set<std::string>> reg = {
      {"problem",
       {"n_dim", "p", "domain_l", "grid_n", "v_family", "v_value", "v_c",
        "v_center", "v_base", "v_depths", "v_centers", "v_widths", "j_family",
        "j_diag", "j_matrix", "j_a", "j_b", "j_axis", "lambda"}},
      {"penalty", {"theta", "k"}},
      {"solver",
       {"nehari_tol", "newton_tol", "newton_entry", "max_iter",
        "newton_max_steps", "minres_max_iter", "minres_rtol", "path_nodes",
        "path_max_sweeps", "verbose"}},
      {"reduction",
       {"tol", "max_iter", "h_xi", "newton_tol_xi", "hess_step", "eps_max",
        "grid_n", "domain_l", "minres_max_iter", "minres_rtol"}},
      {"run",
       {"eps", "eps0", "levels", "seed_point", "seed_points", "xi_points",
        "xi_box", "profile_tol", "profile_rmax", "crit_tol", "coarse_grid",
        "barycenter_r", "axis", "r_inner", "r_cut", "refine_levels", "samples",
        "pin_point", "gamma_samples", "base_grid_n", "frozen_z"}},
      {"output", {"dir"}},
  };
  return reg;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<double> parse_list(const std::string& raw, const std::string& where) {
  std::vector<double> out;
  std::string cleaned = raw;
  std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
  std::istringstream in(cleaned);
  double x;
  while (in >> x) out.push_back(x);
  if (!in.eof())
    throw ConfigError("cannot parse numeric list for " + where + ": '" + raw +
                      "'");
  return out;
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("malformed section header at line " +
                          std::to_string(lineno));
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " +
                        std::to_string(lineno));
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (section.empty())
      throw ConfigError("key '" + key + "' appears before any [section]");
    if (key.empty()) throw ConfigError("empty key at line " + std::to_string(lineno));
    cfg.data_[section][key] = value;
  }
  return cfg;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

void ConfigFile::set(const std::string& dotted_key, const std::string& value) {
  size_t eq = dotted_key.find('.');
  if (eq == std::string::npos)
    throw ConfigError("--set expects section.key, got '" + dotted_key + "'");
  data_[dotted_key.substr(0, eq)][dotted_key.substr(eq + 1)] = value;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  auto s = data_.find(section);
  return s != data_.end() && s->second.count(key) > 0;
}

std::string ConfigFile::get_str(const std::string& section,
                                const std::string& key,
                                const std::string& def) const {
  auto s = data_.find(section);
  if (s == data_.end()) return def;
  auto k = s->second.find(key);
  return k == s->second.end() ? def : k->second;
}

double ConfigFile::get_num(const std::string& section,
                           const std::string& key) const {
  if (!has(section, key))
    throw ConfigError("missing required key '" + section + "." + key + "'");
  return get_num(section, key, 0.0);
}

double ConfigFile::get_num(const std::string& section, const std::string& key,
                           double def) const {
  if (!has(section, key)) return def;
  const std::string raw = get_str(section, key);
  try {
    size_t used = 0;
    double v = std::stod(raw, &used);
    if (trim(raw.substr(used)).size() > 0) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse number for '" + section + "." + key +
                      "': '" + raw + "'");
  }
}

long ConfigFile::get_int(const std::string& section, const std::string& key,
                         long def) const {
  double v = get_num(section, key, double(def));
  long r = std::lround(v);
  if (std::abs(v - r) > 1e-9)
    throw ConfigError("'" + section + "." + key + "' must be an integer");
  return r;
}

std::vector<double> ConfigFile::get_list(const std::string& section,
                                         const std::string& key) const {
  if (!has(section, key))
    throw ConfigError("missing required key '" + section + "." + key + "'");
  return parse_list(get_str(section, key), section + "." + key);
}

std::vector<Vec> ConfigFile::get_points(const std::string& section,
                                        const std::string& key,
                                        int dim) const {
  if (!has(section, key))
    throw ConfigError("missing required key '" + section + "." + key + "'");
  std::string raw = get_str(section, key);
  std::vector<Vec> out;
  std::istringstream in(raw);
  std::string chunk;
  while (std::getline(in, chunk, ';')) {
    std::vector<double> xs = parse_list(chunk, section + "." + key);
    if (static_cast<int>(xs.size()) != dim)
      throw ConfigError("point in '" + section + "." + key + "' has " +
                        std::to_string(xs.size()) + " coordinates, expected " +
                        std::to_string(dim));
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v(i) = xs[i];
    out.push_back(v);
  }
  if (out.empty())
    throw ConfigError("empty point list in '" + section + "." + key + "'");
  return out;
}

void ConfigFile::validate_keys() const {
  const auto& reg = key_registry();
  for (const auto& [section, kv] : data_) {
    auto rs = reg.find(section);
    if (rs == reg.end())
      throw ConfigError("unknown config section '[" + section + "]'");
    for (const auto& [key, value] : kv)
      if (!rs->second.count(key))
        throw ConfigError("unknown config key '" + section + "." + key + "'");
  }
}

std::vector<std::string> ConfigFile::resolved() const {
  std::vector<std::string> out;
  for (const auto& [section, kv] : data_)
    for (const auto& [key, value] : kv)
      out.push_back(section + "." + key + " = " + value);
  return out;
}

ExperimentConfig ExperimentConfig::load(const std::string& path,
                                        const std::vector<std::string>& overrides,
                                        const std::string& out_dir_flag) {
  ConfigFile file = ConfigFile::parse_file(path);
  for (const std::string& ov : overrides) {
    size_t eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + ov + "'");
    file.set(trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
  }
  file.validate_keys();

  ExperimentConfig cfg;
  cfg.raw = file;
  cfg.N = static_cast<int>(file.get_int("problem", "n_dim", 0));
  if (cfg.N < 1 || cfg.N > 3)
    throw ConfigError("problem.n_dim must be 1, 2 or 3");
  cfg.p = file.get_num("problem", "p");
  if (!(cfg.p > 1.0)) throw ConfigError("problem.p must exceed 1");
  if (cfg.N >= 3 && !(cfg.p < (cfg.N + 2.0) / (cfg.N - 2.0)))
    throw ConfigError("problem.p must be below (N+2)/(N-2)");
  cfg.domain_l = file.get_num("problem", "domain_l");
  cfg.grid_n = static_cast<int>(file.get_int("problem", "grid_n", 0));

  // potential
  std::string vf = file.get_str("problem", "v_family", "constant");
  cfg.v_spec.family = vf;
  if (vf == "constant") {
    cfg.v_spec.params["value"] = {file.get_num("problem", "v_value", 1.0)};
  } else if (vf == "quadratic_well") {
    cfg.v_spec.params["c"] = {file.get_num("problem", "v_c")};
    cfg.v_spec.params["center"] =
        file.has("problem", "v_center")
            ? file.get_list("problem", "v_center")
            : std::vector<double>(cfg.N, 0.0);
  } else if (vf == "gaussian_wells") {
    cfg.v_spec.params["base"] = {file.get_num("problem", "v_base")};
    cfg.v_spec.params["depths"] = file.get_list("problem", "v_depths");
    cfg.v_spec.params["centers"] = file.get_list("problem", "v_centers");
    cfg.v_spec.params["widths"] = file.get_list("problem", "v_widths");
  } else {
    throw ConfigError("unknown problem.v_family '" + vf + "'");
  }

  // diffusion
  std::string jf = file.get_str("problem", "j_family", "identity");
  cfg.j_spec.family = jf;
  if (jf == "diag_const") {
    cfg.j_spec.params["diag"] = file.get_list("problem", "j_diag");
  } else if (jf == "const_matrix") {
    cfg.j_spec.params["matrix"] = file.get_list("problem", "j_matrix");
  } else if (jf == "diag_quad" || jf == "diag_affine") {
    cfg.j_spec.params["a"] = file.get_list("problem", "j_a");
    cfg.j_spec.params["b"] = file.get_list("problem", "j_b");
    if (file.has("problem", "j_axis"))
      cfg.j_spec.params["axis"] = file.get_list("problem", "j_axis");
  } else if (jf != "identity") {
    throw ConfigError("unknown problem.j_family '" + jf + "'");
  }

  if (file.has("problem", "lambda")) {
    std::vector<double> lam = file.get_list("problem", "lambda");
    if (static_cast<int>(lam.size()) != 2 * cfg.N)
      throw ConfigError("problem.lambda needs lo,hi per axis (" +
                        std::to_string(2 * cfg.N) + " numbers)");
    Box b;
    b.lo = Vec(cfg.N);
    b.hi = Vec(cfg.N);
    for (int i = 0; i < cfg.N; ++i) {
      b.lo(i) = lam[2 * i];
      b.hi(i) = lam[2 * i + 1];
      if (!(b.lo(i) < b.hi(i)))
        throw ConfigError("problem.lambda has an empty axis range");
    }
    cfg.lambda = b;
  }

  cfg.penalty_theta = file.get_num("penalty", "theta", 0.0);
  cfg.penalty_k = file.get_num("penalty", "k", 0.0);

  cfg.solver.nehari_tol = file.get_num("solver", "nehari_tol", 1e-5);
  cfg.solver.newton_tol = file.get_num("solver", "newton_tol", 1e-9);
  cfg.solver.newton_entry = file.get_num("solver", "newton_entry", 1e-2);
  cfg.solver.max_iterations = file.get_int("solver", "max_iter", 10000);
  cfg.solver.newton_max_steps =
      static_cast<int>(file.get_int("solver", "newton_max_steps", 50));
  cfg.solver.minres_max_iterations =
      static_cast<int>(file.get_int("solver", "minres_max_iter", 400));
  cfg.solver.minres_rtol = file.get_num("solver", "minres_rtol", 1e-8);
  cfg.solver.path_nodes =
      static_cast<int>(file.get_int("solver", "path_nodes", 32));
  cfg.solver.path_max_sweeps =
      static_cast<int>(file.get_int("solver", "path_max_sweeps", 2000));
  cfg.solver.verbose = file.get_int("solver", "verbose", 0) != 0;

  cfg.reduction.tol = file.get_num("reduction", "tol", 1e-8);
  cfg.reduction.max_iterations =
      static_cast<int>(file.get_int("reduction", "max_iter", 100));
  cfg.reduction.h_xi = file.get_num("reduction", "h_xi", 1e-3);
  cfg.reduction.newton_tol = file.get_num("reduction", "newton_tol_xi", 1e-4);
  cfg.reduction.hess_step = file.get_num("reduction", "hess_step", 5e-2);
  cfg.reduction.eps_max = file.get_num("reduction", "eps_max", 0.5);
  cfg.reduction.minres_max_iterations =
      static_cast<int>(file.get_int("reduction", "minres_max_iter", 600));
  cfg.reduction.minres_rtol = file.get_num("reduction", "minres_rtol", 1e-10);
  cfg.reduction.verbose = cfg.solver.verbose;
  cfg.reduction_domain_l = file.get_num("reduction", "domain_l", 0.0);
  cfg.reduction_grid_n =
      static_cast<int>(file.get_int("reduction", "grid_n", 0));

  cfg.out_dir = !out_dir_flag.empty() ? out_dir_flag
                                      : file.get_str("output", "dir", "out");
  return cfg;
}

ProblemSpec ExperimentConfig::make_problem() const {
  ProblemSpec spec;
  spec.N = N;
  spec.p = p;
  spec.grid = build_grid(N, domain_l, grid_n);
  Box domain;
  domain.lo = Vec::Constant(N, -domain_l);
  domain.hi = Vec::Constant(N, domain_l);
  spec.V = make_potential(v_spec, N);
  spec.J = make_diffusion(j_spec, N, domain);
  if (lambda) {
    if (!lambda->strictly_inside(domain, spec.grid->h))
      throw ConfigError(
          "Lambda must lie strictly inside the computational box");
    spec.lambda = lambda;
  }
  return spec;
}

GridPtr ExperimentConfig::make_reduction_grid() const {
  double L = reduction_domain_l > 0 ? reduction_domain_l : domain_l;
  int n = reduction_grid_n > 0 ? reduction_grid_n : grid_n;
  return build_grid(N, L, n);
}

}  // namespace concentra
