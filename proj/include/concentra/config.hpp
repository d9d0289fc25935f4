#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "concentra/common.hpp"
#include "concentra/discretization.hpp"
#include "concentra/reduction.hpp"
#include "concentra/solvers.hpp"

namespace concentra {

/// INI-style key-value file with [section] headers. Unknown keys are
/// rejected against a fixed registry; values stay strings until typed
/// access.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text);

  /// --set section.key=value override.
  void set(const std::string& dotted_key, const std::string& value);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_str(const std::string& section, const std::string& key,
                      const std::string& def = "") const;
  double get_num(const std::string& section, const std::string& key) const;
  double get_num(const std::string& section, const std::string& key,
                 double def) const;
  long get_int(const std::string& section, const std::string& key,
               long def) const;
  std::vector<double> get_list(const std::string& section,
                               const std::string& key) const;
  std::vector<Vec> get_points(const std::string& section,
                              const std::string& key, int dim) const;

  /// Throws ConfigError on keys outside the registry.
  void validate_keys() const;

  /// Deterministic "section.key = value" dump, one entry per line.
  std::vector<std::string> resolved() const;

 private:
  std::map<std::string, std::map<std::string, std::string>> data_;
};

/// Typed experiment configuration: problem, penalty, solver and reduction
/// parameters, validated against the module preconditions.
struct ExperimentConfig {
  int N = 0;
  double p = 0.0;
  double domain_l = 0.0;
  int grid_n = 0;
  FieldSpec v_spec;
  FieldSpec j_spec;
  std::optional<Box> lambda;
  double penalty_theta = 0.0;  // 0 = default (p+3)/2
  double penalty_k = 0.0;      // 0 = default 2 theta/(theta-2)
  SolverOptions solver;
  ReductionOptions reduction;
  double reduction_domain_l = 0.0;  // 0 = problem domain
  int reduction_grid_n = 0;         // 0 = problem grid
  std::string out_dir = "out";
  ConfigFile raw;

  static ExperimentConfig load(const std::string& path,
                               const std::vector<std::string>& overrides,
                               const std::string& out_dir_flag = "");

  /// Builds the grid and coefficient fields; validates Lambda placement.
  ProblemSpec make_problem() const;
  GridPtr make_reduction_grid() const;
};

}  // namespace concentra
