#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "fermidyn/experiments.hpp"
#include "fermidyn/random.hpp"
#include "fermidyn/serialize.hpp"

using namespace fermidyn;
using nlohmann::json;

namespace {

double operator_gap(const FockOperator& a, const FockOperator& b) {
  double worst = 0.0;
  for (int n = 0; n <= a.space().nmax(); ++n) {
    if (!a.in_range(n)) continue;
    worst = std::max(worst, (a.block(n).to_dense() - b.block(n).to_dense()).cwiseAbs().maxCoeff());
  }
  return worst;
}

json without_timing(const ExperimentRecord& r) {
  auto j = r.to_json();
  j.erase("timing");
  return j;
}

}  // namespace

TEST(Serialize, OperatorRoundTripIsExact) {
  Rng rng(90);
  auto space = make_fock_space(6, 3);
  const auto a = random_number_preserving(space, rng, 2, 3);
  const auto c = create(space, rng.one_body(6));
  const auto d = annihilate(space, rng.one_body(6));
  for (const auto* op : {&a, &c, &d}) {
    const auto text = to_json(*op).dump();
    const auto back = operator_from_json(json::parse(text));
    EXPECT_EQ(back.grade(), op->grade());
    EXPECT_EQ(back.space().modes(), 6);
    EXPECT_EQ(operator_gap(*op, back), 0.0);
    EXPECT_EQ(to_json(back).dump(), text);
  }
}

TEST(Serialize, SparseBlocksRoundTrip) {
  auto space = make_fock_space(20, 3);
  const auto n1 = number_op(space, OneBodyVector::basis(20, 2));
  ASSERT_TRUE(n1.block(3).is_sparse());
  const auto back = operator_from_json(to_json(n1), space);
  EXPECT_EQ(operator_gap(n1, back), 0.0);
}

TEST(Serialize, DecompositionRoundTrip) {
  Rng rng(91);
  auto space = make_fock_space(5, 3);
  const auto a = random_number_preserving(space, rng, 2, 2);
  for (auto conv : {Convention::normalized, Convention::paper}) {
    const auto d = extract(a, 3).converted(conv);
    const auto j = to_json(d);
    EXPECT_EQ(j.at("schema"), "fermidyn/1");
    EXPECT_EQ(j.at("level"), 3);
    const auto back = decomposition_from_json(json::parse(j.dump()));
    EXPECT_EQ(back.convention(), conv);
    EXPECT_EQ(component_distance(d, back), 0.0);
  }
}

TEST(Serialize, RejectsMalformedInput) {
  auto space = make_fock_space(4, 2);
  auto j = to_json(FockOperator::identity(space));
  EXPECT_THROW(operator_from_json(j, make_fock_space(5, 2)), ShapeError);
  auto wrong_schema = j;
  wrong_schema["schema"] = "fermidyn/0";
  EXPECT_THROW(operator_from_json(wrong_schema), ConfigError);
  auto missing = j;
  missing.erase("grade");
  EXPECT_THROW(operator_from_json(missing), ConfigError);
  auto out_of_range = j;
  out_of_range["blocks"][0]["entries"] = json::array({json::array({5, 0, 1.0, 0.0})});
  EXPECT_THROW(operator_from_json(out_of_range), ConfigError);
  EXPECT_THROW(decomposition_from_json(j), ConfigError);
}

TEST(Registry, ListsNamedExperimentsWithAnchors) {
  const auto& reg = experiment_registry();
  EXPECT_GE(reg.size(), 9u);
  std::set<std::string> names;
  for (const auto& e : reg) {
    EXPECT_TRUE(names.insert(e.name).second) << e.name;
    EXPECT_FALSE(e.anchors.empty()) << e.name;
    for (const auto& a : e.anchors) EXPECT_FALSE(a.empty()) << e.name;
  }
  for (const char* required : {"car-check", "coherence", "dyson", "clustering", "support-check", "time-average",
                               "number-products", "kms", "trap-sweep"}) {
    EXPECT_TRUE(names.count(required)) << required;
  }
  EXPECT_THROW(find_experiment("unknown"), ConfigError);
}

TEST(Registry, JsonListingRoundTrips) {
  const auto j = registry_json();
  const auto back = json::parse(j.dump());
  EXPECT_EQ(back, j);
  EXPECT_EQ(back.at("experiments").size(), experiment_registry().size());
  for (const auto& e : back.at("experiments")) {
    ExperimentConfig c;
    c.merge(e.at("defaults"));
    EXPECT_EQ(c.to_json(), e.at("defaults"));
  }
}

TEST(Config, MergeAndValidate) {
  auto c = default_config("dyson");
  c.merge(json{{"sites", 5}, {"betas", {0.1, 0.2}}, {"ordering", "literal-recursion"}, {"tolerances", {{"x", 1.0}}}});
  EXPECT_EQ(c.sites, 5);
  EXPECT_EQ(c.betas.size(), 2u);
  EXPECT_EQ(c.ordering, DysonOrdering::literal_recursion);
  EXPECT_THROW(c.merge(json{{"bogus", 1}}), ConfigError);
  EXPECT_THROW(c.merge(json{{"sites", "many"}}), ConfigError);
  EXPECT_THROW(validate(c), ConfigError);  // no tolerance "x" in dyson
  c.tolerances.clear();
  validate(c);
  c.sites = 40;
  c.nmax = 12;
  EXPECT_THROW(validate(c), BudgetError);
  EXPECT_DOUBLE_EQ(budget_entries(4, 2), 1.0 + 16.0 + 36.0);
}

TEST(Config, LoadsFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "fermidyn_config_test.json";
  {
    std::ofstream out(path);
    out << R"({"experiment": "car-check", "samples": 3, "seed": 11})";
  }
  const auto c = ExperimentConfig::load(path);
  EXPECT_EQ(c.experiment, "car-check");
  EXPECT_EQ(c.sites, 8);  // registry default survives
  EXPECT_EQ(c.samples, 3);
  EXPECT_EQ(c.seed, 11u);
  {
    std::ofstream out(path);
    out << "{not json";
  }
  EXPECT_THROW(ExperimentConfig::load(path), ConfigError);
  std::filesystem::remove(path);
}

TEST(Run, ChecksObeyPassContract) {
  for (const char* name : {"car-check", "coherence", "dyson", "support-check", "kappa-compat", "creation-delta",
                           "number-products", "trap-sweep"}) {
    auto c = default_config(name);
    c.samples = std::min(c.samples, 3);
    const auto r = run_experiment(c);
    EXPECT_TRUE(r.passed()) << name << "\n" << r.summary();
    for (const auto& check : r.checks) {
      EXPECT_EQ(check.pass, check.residual <= check.bound) << name << " " << check.name;
      EXPECT_FALSE(check.anchor.empty()) << name << " " << check.name;
    }
  }
}

TEST(Run, DeterministicForFixedSeed) {
  for (const char* name : {"car-check", "coherence", "dyson", "number-products", "support-check"}) {
    auto c = default_config(name);
    c.samples = std::min(c.samples, 4);
    const auto a = run_experiment(c);
    const auto b = run_experiment(c);
    EXPECT_TRUE(same_results(a, b)) << name;
    EXPECT_EQ(without_timing(a).dump(), without_timing(b).dump()) << name;
    c.seed += 1;
    const auto other = run_experiment(c);
    if (std::string(name) != "number-products" || c.samples > 0) EXPECT_FALSE(same_results(a, other)) << name;
  }
}

TEST(Run, ContractivityProbeIsReportedNotChecked) {
  auto c = default_config("clustering");
  c.sites = 32;
  c.separations = {4, 8, 12};
  const auto r = run_experiment(c);
  ASSERT_TRUE(r.passed()) << r.summary();
  const Table* probe = nullptr;
  for (const auto& t : r.tables) {
    if (t.name == "contractivity") probe = &t;
  }
  ASSERT_NE(probe, nullptr);
  EXPECT_EQ(probe->rows.size(), 2u * static_cast<std::size_t>(c.nmax));
  for (const auto& row : probe->rows) EXPECT_GE(row[3].get<double>(), 0.0);
  for (const auto& check : r.checks) EXPECT_EQ(check.name.find("contract"), std::string::npos);
}

TEST(Run, ModuleErrorsBecomeFailedChecks) {
  auto c = default_config("kms");
  c.betas = {400.0};
  c.samples = 1;
  const auto r = run_experiment(c);
  EXPECT_FALSE(r.passed());
  ASSERT_NE(r.find("error"), nullptr);
  EXPECT_FALSE(r.notes.empty());
}

TEST(Run, ConfigErrorsPropagate) {
  auto c = default_config("dyson");
  c.sector = 3;
  EXPECT_THROW(run_experiment(c), ConfigError);
  c = default_config("car-check");
  c.budget = 10.0;
  EXPECT_THROW(run_experiment(c), BudgetError);
}

TEST(Run, FailingToleranceFlipsThePass) {
  auto c = default_config("car-check");
  c.samples = 2;
  c.tolerances["creation-norm"] = 0.0;
  c.seed = 3;
  const auto r = run_experiment(c);
  const auto* check = r.find("creation-norm");
  ASSERT_NE(check, nullptr);
  EXPECT_EQ(check->pass, check->value <= 0.0);
}

TEST(Output, WritesJsonAndCsv) {
  const auto dir = std::filesystem::temp_directory_path() / "fermidyn_output_test";
  std::filesystem::create_directories(dir);
  auto c = default_config("coherence");
  c.samples = 2;
  c.output_json = (dir / "record.json").string();
  c.output_csv = (dir / "tables.csv").string();
  const auto r = run_experiment(c);
  write_outputs(r);
  std::ifstream in(c.output_json);
  const auto j = json::parse(in);
  EXPECT_EQ(j.at("schema"), "fermidyn/1");
  EXPECT_EQ(j.at("checks").size(), r.checks.size());
  std::ifstream levels(dir / "tables_levels.csv");
  std::string header;
  std::getline(levels, header);
  EXPECT_EQ(header, "n,realize_extract,kappa_normalized,kappa_paper,kappa_product,kappa_monomial");
  int rows = 0;
  for (std::string line; std::getline(levels, line);) ++rows;
  EXPECT_EQ(rows, c.nmax + 1);
  std::filesystem::remove_all(dir);
}

TEST(Output, CsvQuotesStrings) {
  Table t{"t", {"a", "b"}, {}};
  t.add({1, "x,y"});
  t.add({2.5, "plain"});
  EXPECT_EQ(t.csv(), "a,b\n1,\"x,y\"\n2.5,plain\n");
}
