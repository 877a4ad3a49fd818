#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fermidyn/dynamics.hpp"
#include "fermidyn/lattice.hpp"

namespace fermidyn {

struct ExperimentConfig {
  std::string experiment;

  int sites = 6;
  double spacing = 1.0;
  Boundary boundary = Boundary::open;
  std::string potential = "box:1,1";
  int nmax = 3;
  int sector = 2;  // particle number used by single-sector checks

  double time = 0.5;
  std::vector<double> times{0.2, 0.4};
  int dyson_order = 0;  // 0: smallest order whose tail bound is below tail_tolerance
  DysonOrdering ordering = DysonOrdering::interaction_picture;
  int quad_nodes = 16;
  double quad_tolerance = 1e-8;
  double tail_tolerance = 1e-6;

  std::vector<double> betas{0.5, 1.0, 2.0};
  std::vector<double> trap_lengths{2.0, 4.0, 8.0, 16.0};
  double xi = 0.0;  // test function support; 0 picks 1.1 x the largest weighted Bohr frequency
  std::vector<std::string> observables{"id", "n:0"};

  std::vector<int> separations{8, 16, 24, 32};
  double decay_length = 2.0;
  std::vector<double> widths{0.2, 0.1, 0.05};
  int witness_modes = 2;

  int samples = 10;
  std::uint64_t seed = 7;
  double budget = 5e7;  // cap on sum_n C(M, n)^2

  std::string output_json;
  std::string output_csv;
  std::map<std::string, double> tolerances;  // per-check bound overrides

  QuadratureSpec quadrature() const { return {quad_nodes, quad_tolerance}; }

  nlohmann::json to_json() const;
  /// Overwrites the fields present in `j`; unknown keys raise ConfigError.
  void merge(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
};

struct Check {
  std::string name;
  std::string anchor;
  double value = 0.0;
  double bound = 0.0;
  double residual = 0.0;
  bool pass = false;
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;

  void add(std::vector<nlohmann::json> row) { rows.push_back(std::move(row)); }
  std::string csv() const;
};

struct ExperimentRecord {
  ExperimentConfig config;
  std::vector<Check> checks;
  std::vector<Table> tables;
  std::vector<std::string> notes;
  double wall_time = 0.0;
  std::string timestamp;

  bool passed() const;
  const Check* find(const std::string& name) const;

  /// residual = value, pass iff value <= bound (NaN fails).
  Check& at_most(const std::string& name, const std::string& anchor, double value, double bound);
  /// residual = max(0, threshold - value), bound 0.
  Check& at_least(const std::string& name, const std::string& anchor, double value, double threshold);

  nlohmann::json to_json() const;
  /// Human-readable summary, one line per check.
  std::string summary() const;
};

struct ExperimentInfo {
  std::string name;
  std::string summary;
  std::vector<std::string> anchors;
  std::map<std::string, double> tolerances;
  std::function<void(ExperimentConfig&)> defaults;
  std::function<void(const ExperimentConfig&, ExperimentRecord&)> run;
};

const std::vector<ExperimentInfo>& experiment_registry();
/// ConfigError for unknown names.
const ExperimentInfo& find_experiment(const std::string& name);
ExperimentConfig default_config(const std::string& name);
nlohmann::json registry_json();
std::string registry_text();

/// sum_{n <= nmax} C(M, n)^2
double budget_entries(int sites, int nmax);
/// Schema and budget validation; ConfigError or BudgetError.
void validate(const ExperimentConfig& config);

/// Validates, dispatches and times one experiment. Module errors raised
/// while running become a failed "error" check.
ExperimentRecord run_experiment(const ExperimentConfig& config);

/// Writes the JSON record and CSV tables named in the config.
void write_outputs(const ExperimentRecord& record);

/// Checks equal in name, value, bound, residual and pass (bitwise on doubles).
bool same_results(const ExperimentRecord& a, const ExperimentRecord& b);

}  // namespace fermidyn
