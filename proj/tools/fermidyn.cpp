// fermidyn: experiment driver.
//
//   fermidyn list [--format text|json]
//   fermidyn run <experiment> [options]
//   fermidyn <experiment> [options]
//
// Exit status: 0 when every check passes, 1 when a check fails,
// 2 on configuration or budget errors.

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "fermidyn/experiments.hpp"

using namespace fermidyn;

namespace {

struct Overrides {
  std::string config_file;
  std::optional<int> sites, nmax, sector, dyson_order, quad_nodes, samples, witness_modes;
  std::optional<double> spacing, time, quad_tolerance, tail_tolerance, xi, decay_length, budget;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> boundary, potential, ordering, json_path, csv_path;
  std::vector<double> times, betas, trap_lengths, widths;
  std::vector<int> separations;
  std::vector<std::string> observables, tolerances;
  std::string format = "text";
};

void add_options(CLI::App& app, Overrides& o) {
  app.add_option("--config", o.config_file, "JSON configuration file (flags override it)")->check(CLI::ExistingFile);
  app.add_option("--sites", o.sites, "Number of lattice sites M");
  app.add_option("--spacing", o.spacing, "Lattice spacing");
  app.add_option("--boundary", o.boundary, "open or periodic");
  app.add_option("--potential", o.potential, "box:A,r | gauss:A,w | file:PATH | none");
  app.add_option("--nmax", o.nmax, "Particle-number truncation N_max");
  app.add_option("--sector", o.sector, "Particle number n of single-sector checks");
  app.add_option("--seed", o.seed, "Seed of the random generator");
  app.add_option("--time", o.time, "Evolution time t");
  app.add_option("--times", o.times, "List of times")->delimiter(',');
  app.add_option("--dyson-order", o.dyson_order, "Dyson truncation order L (0: from --tolerance)");
  app.add_option("--dyson-ordering", o.ordering, "interaction-picture or literal-recursion");
  app.add_option("--quad-nodes", o.quad_nodes, "Gauss-Legendre nodes per panel");
  app.add_option("--quad-tol", o.quad_tolerance, "Quadrature tolerance");
  app.add_option("--tolerance", o.tail_tolerance, "Dyson tail tolerance");
  app.add_option("--beta", o.betas, "Inverse temperatures")->delimiter(',');
  app.add_option("--trap-L", o.trap_lengths, "Trap lengths")->delimiter(',');
  app.add_option("--xi", o.xi, "Support of the test function's Fourier transform (0: automatic)");
  app.add_option("--observables", o.observables, "id, n:i, nn:i,j or hop:i,j (separate with ';')")->delimiter(';');
  app.add_option("--separations", o.separations, "Translation distances")->delimiter(',');
  app.add_option("--decay-length", o.decay_length, "Decay length of exponentially localized components");
  app.add_option("--widths", o.widths, "Window half widths")->delimiter(',');
  app.add_option("--witness-modes", o.witness_modes, "Mode count k of separation candidates");
  app.add_option("--samples", o.samples, "Number of random samples");
  app.add_option("--budget", o.budget, "Cap on sum_n C(M,n)^2 matrix entries");
  app.add_option("--tol", o.tolerances, "Check tolerance override NAME=VALUE (repeatable)");
  app.add_option("--json", o.json_path, "Write the JSON record here");
  app.add_option("--csv", o.csv_path, "Write CSV tables here");
  app.add_option("--format", o.format, "Console output format")->check(CLI::IsMember({"text", "json"}));
}

ExperimentConfig build_config(const std::string& name, const Overrides& o) {
  ExperimentConfig c = o.config_file.empty() ? default_config(name) : ExperimentConfig::load(o.config_file);
  if (!name.empty()) {
    if (!o.config_file.empty() && c.experiment != name) {
      // The command line names the experiment: start from its defaults and
      // apply the file on top.
      auto file = ExperimentConfig::load(o.config_file).to_json();
      c = default_config(name);
      file.erase("experiment");
      c.merge(file);
    }
    c.experiment = name;
  }
  if (o.sites) c.sites = *o.sites;
  if (o.spacing) c.spacing = *o.spacing;
  if (o.boundary) c.boundary = parse_boundary(*o.boundary);
  if (o.potential) c.potential = *o.potential;
  if (o.nmax) c.nmax = *o.nmax;
  if (o.sector) c.sector = *o.sector;
  if (o.seed) c.seed = *o.seed;
  if (o.time) c.time = *o.time;
  if (!o.times.empty()) c.times = o.times;
  if (o.dyson_order) c.dyson_order = *o.dyson_order;
  if (o.ordering) c.ordering = parse_dyson_ordering(*o.ordering);
  if (o.quad_nodes) c.quad_nodes = *o.quad_nodes;
  if (o.quad_tolerance) c.quad_tolerance = *o.quad_tolerance;
  if (o.tail_tolerance) c.tail_tolerance = *o.tail_tolerance;
  if (!o.betas.empty()) c.betas = o.betas;
  if (!o.trap_lengths.empty()) c.trap_lengths = o.trap_lengths;
  if (o.xi) c.xi = *o.xi;
  if (!o.observables.empty()) c.observables = o.observables;
  if (!o.separations.empty()) c.separations = o.separations;
  if (o.decay_length) c.decay_length = *o.decay_length;
  if (!o.widths.empty()) c.widths = o.widths;
  if (o.witness_modes) c.witness_modes = *o.witness_modes;
  if (o.samples) c.samples = *o.samples;
  if (o.budget) c.budget = *o.budget;
  if (o.json_path) c.output_json = *o.json_path;
  if (o.csv_path) c.output_csv = *o.csv_path;
  for (const auto& t : o.tolerances) {
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("--tol expects NAME=VALUE, got '" + t + "'");
    try {
      c.tolerances[t.substr(0, eq)] = std::stod(t.substr(eq + 1));
    } catch (const std::logic_error&) {
      throw ConfigError("--tol value is not a number: '" + t + "'");
    }
  }
  if (c.experiment.empty()) throw ConfigError("no experiment named on the command line or in the configuration");
  return c;
}

int execute(const std::string& name, const Overrides& o) {
  try {
    const auto config = build_config(name, o);
    const auto record = run_experiment(config);
    write_outputs(record);
    if (o.format == "json") {
      std::cout << record.to_json().dump(2) << "\n";
    } else {
      std::cout << record.summary();
    }
    return record.passed() ? 0 : 1;
  } catch (const BudgetError& e) {
    std::cerr << "budget error: " << e.what() << "\n";
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fermidyn: finite-volume checks for fermionic lattice dynamics"};
  app.require_subcommand(1);
  int status = 0;

  std::string list_format = "text";
  auto* list = app.add_subcommand("list", "List registered experiments");
  list->add_option("--format", list_format, "text or json")->check(CLI::IsMember({"text", "json"}));
  list->callback([&] {
    if (list_format == "json") {
      std::cout << registry_json().dump(2) << "\n";
    } else {
      std::cout << registry_text();
    }
  });

  Overrides run_opts;
  std::string run_name;
  auto* run = app.add_subcommand("run", "Run an experiment");
  run->add_option("experiment", run_name, "Experiment name (optional with --config)");
  add_options(*run, run_opts);
  run->callback([&] { status = execute(run_name, run_opts); });

  std::vector<Overrides> alias_opts(experiment_registry().size());
  for (std::size_t i = 0; i < experiment_registry().size(); ++i) {
    const auto& info = experiment_registry()[i];
    auto* sub = app.add_subcommand(info.name, info.summary);
    add_options(*sub, alias_opts[i]);
    sub->callback([&, i] { status = execute(experiment_registry()[i].name, alias_opts[i]); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return status;
}
