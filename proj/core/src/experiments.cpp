#include "fermidyn/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "fermidyn/kms.hpp"
#include "fermidyn/random.hpp"
#include "fermidyn/sector_algebra.hpp"
#include "fermidyn/serialize.hpp"

namespace fermidyn {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

json ExperimentConfig::to_json() const {
  return {{"experiment", experiment},
          {"sites", sites},
          {"spacing", spacing},
          {"boundary", to_string(boundary)},
          {"potential", potential},
          {"nmax", nmax},
          {"sector", sector},
          {"time", time},
          {"times", times},
          {"dyson_order", dyson_order},
          {"ordering", to_string(ordering)},
          {"quad_nodes", quad_nodes},
          {"quad_tolerance", quad_tolerance},
          {"tail_tolerance", tail_tolerance},
          {"betas", betas},
          {"trap_lengths", trap_lengths},
          {"xi", xi},
          {"observables", observables},
          {"separations", separations},
          {"decay_length", decay_length},
          {"widths", widths},
          {"witness_modes", witness_modes},
          {"samples", samples},
          {"seed", seed},
          {"budget", budget},
          {"output_json", output_json},
          {"output_csv", output_csv},
          {"tolerances", tolerances}};
}

void ExperimentConfig::merge(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "experiment") experiment = v.get<std::string>();
      else if (key == "sites") sites = v.get<int>();
      else if (key == "spacing") spacing = v.get<double>();
      else if (key == "boundary") boundary = parse_boundary(v.get<std::string>());
      else if (key == "potential") potential = v.get<std::string>();
      else if (key == "nmax") nmax = v.get<int>();
      else if (key == "sector") sector = v.get<int>();
      else if (key == "time") time = v.get<double>();
      else if (key == "times") times = v.get<std::vector<double>>();
      else if (key == "dyson_order") dyson_order = v.get<int>();
      else if (key == "ordering") ordering = parse_dyson_ordering(v.get<std::string>());
      else if (key == "quad_nodes") quad_nodes = v.get<int>();
      else if (key == "quad_tolerance") quad_tolerance = v.get<double>();
      else if (key == "tail_tolerance") tail_tolerance = v.get<double>();
      else if (key == "betas") betas = v.get<std::vector<double>>();
      else if (key == "trap_lengths") trap_lengths = v.get<std::vector<double>>();
      else if (key == "xi") xi = v.get<double>();
      else if (key == "observables") observables = v.get<std::vector<std::string>>();
      else if (key == "separations") separations = v.get<std::vector<int>>();
      else if (key == "decay_length") decay_length = v.get<double>();
      else if (key == "widths") widths = v.get<std::vector<double>>();
      else if (key == "witness_modes") witness_modes = v.get<int>();
      else if (key == "samples") samples = v.get<int>();
      else if (key == "seed") seed = v.get<std::uint64_t>();
      else if (key == "budget") budget = v.get<double>();
      else if (key == "output_json") output_json = v.get<std::string>();
      else if (key == "output_csv") output_csv = v.get<std::string>();
      else if (key == "tolerances") {
        for (const auto& [name, t] : v.items()) tolerances[name] = t.get<double>();
      } else {
        throw ConfigError("unknown configuration key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad configuration value: ") + e.what());
  }
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("configuration " + path.string() + " is not valid JSON: " + e.what());
  }
  ExperimentConfig c;
  if (j.contains("experiment")) c = default_config(j.at("experiment").get<std::string>());
  c.merge(j);
  return c;
}

// ---------------------------------------------------------------------------
// Records

std::string Table::csv() const {
  std::ostringstream out;
  auto cell = [](const json& v) {
    if (!v.is_string()) return v.dump();
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  };
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell(row[i]);
    out << "\n";
  }
  return out.str();
}

bool ExperimentRecord::passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Check* ExperimentRecord::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

Check& ExperimentRecord::at_most(const std::string& name, const std::string& anchor, double value, double bound) {
  checks.push_back({name, anchor, value, bound, value, value <= bound});
  return checks.back();
}

Check& ExperimentRecord::at_least(const std::string& name, const std::string& anchor, double value,
                                  double threshold) {
  const double residual = std::isnan(value) ? std::numeric_limits<double>::infinity() : std::max(0.0, threshold - value);
  checks.push_back({name, anchor, value, 0.0, residual, residual <= 0.0});
  return checks.back();
}

namespace {

json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

}  // namespace

json ExperimentRecord::to_json() const {
  json cs = json::array();
  for (const auto& c : checks) {
    cs.push_back({{"name", c.name},
                  {"anchor", c.anchor},
                  {"value", finite_or_string(c.value)},
                  {"bound", finite_or_string(c.bound)},
                  {"residual", finite_or_string(c.residual)},
                  {"pass", c.pass}});
  }
  json ts = json::array();
  for (const auto& t : tables) ts.push_back({{"name", t.name}, {"columns", t.columns}, {"rows", t.rows}});
  return {{"schema", kSchema},
          {"experiment", config.experiment},
          {"config", config.to_json()},
          {"checks", std::move(cs)},
          {"tables", std::move(ts)},
          {"notes", notes},
          {"pass", passed()},
          {"timing", {{"wall_time_s", wall_time}, {"timestamp", timestamp}}}};
}

std::string ExperimentRecord::summary() const {
  std::ostringstream out;
  out << config.experiment << " (seed " << config.seed << ", M=" << config.sites << ", nmax=" << config.nmax << ")\n";
  out.precision(3);
  for (const auto& c : checks) {
    out << "  " << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  value=" << std::scientific << c.value
        << "  bound=" << c.bound << std::defaultfloat << "\n";
  }
  for (const auto& n : notes) out << "  note: " << n << "\n";
  out << "  " << (passed() ? "all checks passed" : "some checks failed") << " in " << std::fixed << wall_time
      << " s\n";
  return out.str();
}

bool same_results(const ExperimentRecord& a, const ExperimentRecord& b) {
  if (a.checks.size() != b.checks.size()) return false;
  auto bits = [](double x) {
    std::uint64_t u;
    std::memcpy(&u, &x, sizeof u);
    return u;
  };
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    const auto& x = a.checks[i];
    const auto& y = b.checks[i];
    if (x.name != y.name || x.pass != y.pass || bits(x.value) != bits(y.value) || bits(x.bound) != bits(y.bound) ||
        bits(x.residual) != bits(y.residual)) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

double tol(const ExperimentConfig& c, const std::string& name) {
  const auto it = c.tolerances.find(name);
  if (it == c.tolerances.end()) throw ConfigError("no tolerance named '" + name + "'");
  return it->second;
}

struct Model {
  OneBodySpace chain;
  PairInteraction pair;
  FockSpacePtr space;

  explicit Model(const ExperimentConfig& c)
      : chain(c.sites, c.spacing, c.boundary),
        pair(chain, PotentialProfile::parse(c.sites, c.potential)),
        space(make_fock_space(c.sites, c.nmax)) {}
};

void require_sector(const ExperimentConfig& c, int lo, int grade) {
  if (c.sector < lo || c.sector + grade > c.nmax) {
    throw ConfigError("sector " + std::to_string(c.sector) + " needs " + std::to_string(lo) + " <= n and n + " +
                      std::to_string(grade) + " <= nmax");
  }
}

Matrix ketbra(const OneBodyVector& f, const OneBodyVector& g) { return f.coefficients() * g.coefficients().adjoint(); }

FockOperator random_monomial(const FockSpacePtr& space, Rng& rng, int degree, std::vector<Matrix>* ks = nullptr) {
  std::vector<OneBodyVector> fs;
  std::vector<OneBodyVector> gs;
  for (int i = 0; i < degree; ++i) {
    fs.push_back(rng.one_body(space->modes()));
    gs.push_back(rng.one_body(space->modes()));
    if (ks) ks->push_back(ketbra(fs.back(), gs.back()));
  }
  return normal_monomial(space, fs, gs);
}

// -- car-check ---------------------------------------------------------------

void run_car(const ExperimentConfig& c, ExperimentRecord& r) {
  auto space = make_fock_space(c.sites, c.nmax);
  Rng rng(c.seed);
  Table t{"car", {"sample", "aa", "astar_astar", "mixed", "norm_gap"}, {}};
  double aa = 0.0;
  double mixed = 0.0;
  double gap = 0.0;
  for (int s = 0; s < c.samples; ++s) {
    const auto f = rng.one_body(c.sites);
    const auto g = rng.one_body(c.sites);
    const auto af = annihilate(space, f);
    const auto cf = create(space, f);
    const auto ag = annihilate(space, g);
    const auto cg = create(space, g);
    const double x = anticommutator(af, ag).norm();
    const double y = anticommutator(cf, cg).norm();
    const auto m = anticommutator(af, cg);
    const Complex fg = inner(f, g);
    double z = 0.0;
    // The top sector has no room for a*(g); the relation is checked below it.
    for (int n = 0; n < c.nmax; ++n) {
      const Matrix d = m.block(n).to_dense() - fg * Matrix::Identity(space->dim(n), space->dim(n));
      z = std::max(z, spectral_norm(d) / (f.norm() * g.norm()));
    }
    const double w = std::abs(cf.norm() - f.norm());
    aa = std::max({aa, x, y});
    mixed = std::max(mixed, z);
    gap = std::max(gap, w);
    t.add({s, x, y, z, w});
  }
  r.at_most("anticommutator-aa", "{a(f), a(g)} = 0 = {a*(f), a*(g)}", aa, tol(c, "anticommutator-aa"));
  r.at_most("anticommutator-aastar", "{a(f), a*(g)} = <f, g> Id", mixed, tol(c, "anticommutator-aastar"));
  r.at_most("creation-norm", "||a*(f)|| = ||f||", gap, tol(c, "creation-norm"));
  r.tables.push_back(std::move(t));
}

// -- coherence ---------------------------------------------------------------

void run_coherence(const ExperimentConfig& c, ExperimentRecord& r) {
  auto space = make_fock_space(c.sites, c.nmax);
  Rng rng(c.seed);

  // Restriction factor of normal-ordered monomials.
  double via_embed = 0.0;
  double via_wedge = 0.0;
  Table factor{"restriction_factor", {"m", "n", "c_nm", "embed_gap", "wedge_gap"}, {}};
  for (int m = 1; m <= c.nmax; ++m) {
    std::vector<Matrix> ks;
    const auto mono = random_monomial(space, rng, m, &ks);
    const Matrix comp = mono.block(m).to_dense() / factorial(m);
    const double sign = (m * (m - 1) / 2) % 2 ? -1.0 : 1.0;
    for (int n = m; n <= c.nmax; ++n) {
      const Matrix restricted = mono.block(n).to_dense();
      const double scale = std::max(1.0, spectral_norm(restricted));
      const double e = spectral_norm(restricted - falling_factorial(n, m) * embed(*space, comp, m, n).to_dense()) / scale;
      auto full = ks;
      while (static_cast<int>(full.size()) < n) full.push_back(Matrix::Identity(c.sites, c.sites));
      const double w = spectral_norm(restricted - falling_factorial(n, m) * sign * wedge_operator(*space, full)) / scale;
      via_embed = std::max(via_embed, e);
      via_wedge = std::max(via_wedge, w);
      factor.add({m, n, falling_factorial(n, m), e, w});
    }
  }
  r.at_most("monomial-embed", "a*..a* a..a |F_n = c(n,m) C ^ Id, c(n,m) = n!/(n-m)!", via_embed,
            tol(c, "monomial-embed"));
  r.at_most("monomial-wedge", "a*..a* a..a |F_n = c(n,m) (-1)^{m(m-1)/2} K_1 ^ .. ^ K_m ^ Id", via_wedge,
            tol(c, "monomial-wedge"));

  // Coherence on random polynomials, both bookkeeping conventions.
  std::vector<double> roundtrip(static_cast<std::size_t>(c.nmax + 1), 0.0);
  std::vector<double> normalized(roundtrip.size(), 0.0);
  std::vector<double> paper(roundtrip.size(), 0.0);
  std::vector<double> homomorphism(roundtrip.size(), 0.0);
  for (int s = 0; s < c.samples; ++s) {
    const auto a = random_number_preserving(space, rng, 2, 3);
    const auto b = random_number_preserving(space, rng, 1, 2);
    const auto ab = a * b;
    const double scale = std::max(1.0, a.norm());
    const double pscale = std::max(1.0, ab.norm());
    for (int n = 0; n <= c.nmax; ++n) {
      const auto d = extract(a, n);
      auto& rt = roundtrip[static_cast<std::size_t>(n)];
      rt = std::max(rt, (realize(d, n) - a.block(n)).norm() / scale);
      if (n == 0) continue;
      const Block below = a.block(n - 1);
      auto& nz = normalized[static_cast<std::size_t>(n)];
      nz = std::max(nz, (realize(kappa(d), n - 1) - below).norm() / scale);
      auto& pp = paper[static_cast<std::size_t>(n)];
      pp = std::max(pp, (realize(kappa(d.converted(Convention::paper)), n - 1) - below).norm() / scale);
      auto& hm = homomorphism[static_cast<std::size_t>(n)];
      hm = std::max(hm, (realize(kappa(extract(ab, n)), n - 1) - ab.block(n - 1)).norm() / pscale);
    }
  }
  // Degree-two monomial family.
  std::vector<double> monomial_family(roundtrip.size(), 0.0);
  if (c.nmax >= 2) {
    for (int s = 0; s < c.samples; ++s) {
      const auto a = random_monomial(space, rng, 2);
      const double scale = std::max(1.0, a.norm());
      for (int n = 1; n <= c.nmax; ++n) {
        const auto k = kappa(extract(a, n).converted(Convention::paper));
        auto& mf = monomial_family[static_cast<std::size_t>(n)];
        mf = std::max(mf, (realize(k, n - 1) - a.block(n - 1)).norm() / scale);
      }
    }
  }
  Table levels{"levels", {"n", "realize_extract", "kappa_normalized", "kappa_paper", "kappa_product", "kappa_monomial"},
               {}};
  for (int n = 0; n <= c.nmax; ++n) {
    const auto i = static_cast<std::size_t>(n);
    levels.add({n, roundtrip[i], normalized[i], paper[i], homomorphism[i], monomial_family[i]});
  }
  auto worst = [](const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); };
  r.at_most("realize-extract", "realize(extract(A, n), n) = A|F_n", worst(roundtrip), tol(c, "realize-extract"));
  r.at_most("kappa-normalized", "realize(kappa(extract(A, n)), n-1) = A|F_{n-1}", worst(normalized),
            tol(c, "kappa-normalized"));
  r.at_most("kappa-paper", "kappa scales component m by (n-m)/n", worst(paper), tol(c, "kappa-paper"));
  r.at_most("kappa-product", "kappa is multiplicative on extracted products", worst(homomorphism),
            tol(c, "kappa-product"));
  if (c.nmax >= 2) {
    r.at_most("kappa-monomial", "coherence of a*(f1)a*(f2)a(g1)a(g2)", worst(monomial_family),
              tol(c, "kappa-monomial"));
  }
  r.tables.push_back(std::move(factor));
  r.tables.push_back(std::move(levels));
}

// -- dyson -------------------------------------------------------------------

void run_dyson(const ExperimentConfig& c, ExperimentRecord& r) {
  require_sector(c, 0, 1);
  Model model(c);
  const auto h = Hamiltonian::interacting(model.space, model.pair);
  const Propagator full(h);
  const Propagator free(h.free_part());
  Rng rng(c.seed);
  const int n = c.sector;
  const double t = c.time;
  const bool literal = c.ordering == DysonOrdering::literal_recursion;
  Table terms{"terms", {"grade", "l", "norm", "bound", "quadrature_error"}, {}};

  for (int grade : {0, 1}) {
    Matrix seed;
    double seed_norm = 0.0;
    if (grade == 0) {
      seed = random_number_preserving(model.space, rng, 2, 3).block(n).to_dense();
      seed_norm = spectral_norm(seed);
    } else {
      const auto f = rng.one_body(c.sites);
      seed = create(model.space, f).block(n).to_dense();
      seed_norm = f.norm();
    }
    DysonSeries series(h, n, grade);
    const bool automatic = c.dyson_order <= 0;
    const int order = automatic ? series.order_for(t, seed_norm, c.tail_tolerance) : c.dyson_order;
    const auto res = series.sum(seed, t, order, c.quadrature(), std::numeric_limits<double>::infinity(), c.ordering);
    // gamma_t = alpha_t o alpha^0_{-t}; the literal recursion sums to its inverse.
    const int m = n + grade;
    const Matrix exact =
        literal ? free.evolution(m, t) * full.evolution(m, -t) * seed * full.evolution(n, t) * free.evolution(n, -t)
                : full.evolution(m, t) * free.evolution(m, -t) * seed * free.evolution(n, t) * full.evolution(n, -t);
    const double err = spectral_norm(res.sum - exact);
    const std::string g = "grade" + std::to_string(grade);
    const std::string target = literal ? "alpha^0_t o alpha_{-t}(A)" : "gamma_t(A) = alpha_t o alpha^0_{-t}(A)";
    r.at_most(g + "-error", "partial Dyson sum vs " + target + " within tail + quadrature", err,
              res.tail_bound + res.quadrature_error);
    if (automatic) {
      r.at_most(g + "-tail", "tail bound sum_{l>L} (|t| rate)^l / l! ||A||", res.tail_bound, c.tail_tolerance);
    }
    double ratio = 0.0;
    for (const auto& term : res.terms) {
      const double allowed = term.bound * (1.0 + 1e-12) + term.error;
      ratio = std::max(ratio, allowed > 0.0 ? term.norm / allowed : (term.norm > 0.0 ? 1e300 : 0.0));
      terms.add({grade, term.order, term.norm, term.bound, term.error});
    }
    r.at_most(g + "-term-bounds", "||D_l|| <= (|t| rate)^l / l! ||A||, rate = ||V_n|| + ||V_{n+grade}||", ratio, 1.0);
    if (grade == 0 && order >= 1) {
      const auto d = delta_n(series.frame(), seed, t, c.quadrature());
      const double sign = literal ? -1.0 : 1.0;
      const double gap = spectral_norm(res.terms[1].value + sign * d.value);
      r.at_most("first-term-delta", literal ? "D_1 = Delta_n(t)" : "D_1 = -Delta_n(t), Delta = i int [A, V(s)] ds", gap,
                2.0 * (d.error + res.terms[1].error) + 1e-14 * seed_norm);
    }
  }
  r.tables.push_back(std::move(terms));
}

// -- clustering ----------------------------------------------------------------

OneBodyVector exponential_tail(Rng& rng, int sites, int center, double decay) {
  Vector v(sites);
  for (int i = 0; i < sites; ++i) v(i) = rng.complex_normal() * std::exp(-std::abs(i - center) / decay);
  return OneBodyVector(std::move(v));
}

void run_clustering(const ExperimentConfig& c, ExperimentRecord& r) {
  require_sector(c, 2, 0);
  if (c.boundary != Boundary::open) throw ConfigError("clustering sweeps need an open chain");
  if (c.separations.empty()) throw ConfigError("clustering needs at least one separation");
  const int n = c.sector;
  const OneBodySpace chain(c.sites, c.spacing, c.boundary);
  auto space = make_fock_space(c.sites, c.nmax);
  Rng rng(c.seed);
  std::vector<OneBodyVector> fs;
  std::vector<OneBodyVector> gs;
  for (int k = 0; k < n; ++k) {
    fs.push_back(rng.localized(c.sites, 4 + 2 * k, 1));
    gs.push_back(rng.localized(c.sites, 4 + 2 * k, 1));
  }
  const int center = 4 + n - 1;
  const auto u = exponential_tail(rng, c.sites, center, c.decay_length);
  const auto v = exponential_tail(rng, c.sites, center, c.decay_length);
  const Matrix comp = ketbra(u, v);
  FockOperator a(space, 0);
  a.set_block(n, embed(*space, comp, 1, n));
  a.set_block(n - 1, embed(*space, comp, 1, n - 1));
  const double coefficient = (n - 1.0) / n;

  std::vector<OneBodyVector> tops{u, v};
  while (static_cast<int>(tops.size()) < n) tops.push_back(exponential_tail(rng, c.sites, center, c.decay_length));
  tops.resize(static_cast<std::size_t>(n));
  const Vector w = wedge_vector(*space, tops);
  FockOperator top(space, 0);
  top.set_block(n, Block(Matrix(w * w.adjoint())));

  Table sweep{"sweep", {"separation", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "gap", "ratio", "top_lhs"}, {}};
  double increase = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  double gap = 0.0;
  double ratio = 0.0;
  double top_lhs = 0.0;
  for (int x : c.separations) {
    const auto s = clustering_correlator(chain, a, fs, gs, -x);
    const auto z = clustering_correlator(chain, top, fs, gs, -x);
    gap = std::abs(s.lhs - coefficient * s.rhs);
    ratio = std::abs(s.rhs) > 0.0 ? std::real(s.lhs / s.rhs) : std::numeric_limits<double>::quiet_NaN();
    top_lhs = std::abs(z.lhs);
    if (std::isfinite(prev)) increase = std::max(increase, gap - prev);
    prev = gap;
    sweep.add({x, s.lhs.real(), s.lhs.imag(), s.rhs.real(), s.rhs.imag(), gap, finite_or_string(ratio), top_lhs});
  }
  r.at_most("gap-monotone", "correlator approaches its factorized limit monotonically", increase, 0.0);
  r.at_most("final-gap", "|<.., A ..T_x f_n> - (n-m)/n <.., A ..><g_n, f_n>| at the largest x", gap,
            tol(c, "final-gap"));
  r.at_most("coefficient", "(n-m)/n recovered at the largest x", std::abs(ratio - coefficient) / coefficient,
            tol(c, "coefficient"));
  r.at_most("top-component", "the limit vanishes for m = n", top_lhs, tol(c, "final-gap"));
  r.tables.push_back(std::move(sweep));

  // Reported only: max(0, ||A||_{n-1} - ||A||_n) for a window-supported polynomial.
  Table contract{"contractivity", {"sites", "n", "seminorm", "excess"}, {}};
  for (int m : {16, 32, 64}) {
    if (m > c.sites) break;
    auto small = make_fock_space(m, c.nmax);
    Rng prng(c.seed + 1);
    std::vector<OneBodyVector> ps;
    std::vector<OneBodyVector> qs;
    for (int k = 0; k < 2; ++k) {
      ps.push_back(prng.localized(m, 2, 2));
      qs.push_back(prng.localized(m, 2, 2));
    }
    FockOperator p = FockOperator::identity(small) * Complex(0.5, 0.0);
    p = p + normal_monomial(small, {ps[0]}, {qs[0]});
    if (c.nmax >= 2) p = p + normal_monomial(small, ps, qs);
    double prev_norm = p.seminorm(0);
    for (int k = 1; k <= c.nmax; ++k) {
      const double s = p.seminorm(k);
      contract.add({m, k, s, std::max(0.0, prev_norm - s)});
      prev_norm = s;
    }
  }
  if (!contract.rows.empty()) r.tables.push_back(std::move(contract));
}

// -- support-check -------------------------------------------------------------

void run_support(const ExperimentConfig& c, ExperimentRecord& r) {
  Model model(c);
  const auto h = Hamiltonian::interacting(model.space, model.pair);
  Rng rng(c.seed);
  double mismatch = 0.0;
  for (int s = 0; s < c.samples; ++s) {
    mismatch = std::max(mismatch,
                        commutator_kernels(h, rng.one_body(c.sites), std::numeric_limits<double>::infinity()).mismatch);
  }
  r.at_most("kernel-mismatch", "kernel form of [V, a#(h)] equals the matrix commutator", mismatch,
            tol(c, "kernel-mismatch"));

  if (c.sites < 3) throw ConfigError("support-check needs at least three sites");
  const std::vector<Complex> window{rng.complex_normal(), rng.complex_normal(), rng.complex_normal()};
  const auto probe = OneBodyVector::localized(c.sites, 1, window);
  Table t{"support", {"center", "distance", "range", "annihilate_norm", "create_norm"}, {}};
  double separated = 0.0;
  double overlapping = 0.0;
  int separated_count = 0;
  for (int center = 1; center <= c.sites - 2; ++center) {
    const auto f = OneBodyVector::localized(c.sites, center, window);
    const auto rep = support_vanishing_check(h, f, probe);
    if (rep.separated()) {
      separated = std::max(separated, rep.norm());
      ++separated_count;
    } else {
      overlapping = std::max(overlapping, rep.norm());
    }
    t.add({center, rep.distance, rep.interaction_range, rep.annihilate_norm, rep.create_norm});
  }
  r.at_least("separated-configurations", "at least one configuration with dist(supp f, supp h) > r_V",
             separated_count, 1.0);
  r.at_most("separated-vanishing", "{a*(f), [V, a#(h)]} = 0 when dist(supp f, supp h) > r_V", separated,
            tol(c, "separated-vanishing"));
  r.at_least("overlap-nondegenerate", "{a*(f), [V, a#(h)]} nonzero for overlapping supports", overlapping,
             tol(c, "overlap-nondegenerate"));
  r.tables.push_back(std::move(t));
}

// -- kappa-compat --------------------------------------------------------------

void run_kappa_compat(const ExperimentConfig& c, ExperimentRecord& r) {
  require_sector(c, 1, 0);
  Model model(c);
  const auto h = Hamiltonian::interacting(model.space, model.pair);
  const Propagator p(h);
  Rng rng(c.seed);
  const auto a = random_monomial(model.space, rng, 1) + random_monomial(model.space, rng, 2);
  const auto b = random_monomial(model.space, rng, std::min(2, c.sector));
  Table t{"compat", {"time", "delta_residual", "quadrature_error", "alpha_residual"}, {}};
  double delta_excess = 0.0;
  double alpha = 0.0;
  for (double time : c.times) {
    const auto d = kappa_delta_compat(h, a, time, c.sector, c.quadrature());
    const auto al = kappa_alpha_compat(p, b, time, c.sector);
    const double bound = 2.0 * d.quadrature_error;
    delta_excess = std::max(delta_excess, bound > 0.0 ? d.residual / bound : (d.residual > 0.0 ? 1e300 : 0.0));
    alpha = std::max(alpha, al.residual);
    t.add({time, d.residual, d.quadrature_error, al.residual});
  }
  r.at_most("kappa-delta", "kappa_n(Delta_n(t)(A)) = Delta_{n-1}(t)(kappa_n A), residual / (2 x quadrature)",
            delta_excess, 1.0);
  r.at_most("kappa-alpha", "kappa_n(alpha_t(A)) = alpha_t(kappa_n A)", alpha, tol(c, "kappa-alpha"));
  r.tables.push_back(std::move(t));
}

// -- creation-delta --------------------------------------------------------------

void run_creation_delta(const ExperimentConfig& c, ExperimentRecord& r) {
  require_sector(c, 1, 1);
  Model model(c);
  const auto h = Hamiltonian::interacting(model.space, model.pair);
  Rng rng(c.seed);
  Table t{"identity", {"sample", "identity_residual", "quadrature_error", "kernel_mismatch", "kernel_hermiticity"}, {}};
  double excess = 0.0;
  double mismatch = 0.0;
  double herm = 0.0;
  for (int s = 0; s < c.samples; ++s) {
    const auto f = rng.one_body(c.sites);
    const auto rep = creation_delta_identity(h, f, c.time, c.sector, c.quadrature());
    const double bound = 2.0 * rep.quadrature_error;
    excess = std::max(excess, bound > 0.0 ? rep.identity_residual / bound : (rep.identity_residual > 0.0 ? 1e300 : 0.0));
    mismatch = std::max(mismatch, rep.kernel_mismatch);
    herm = std::max(herm, rep.kernel_hermiticity);
    t.add({s, rep.identity_residual, rep.quadrature_error, rep.kernel_mismatch, rep.kernel_hermiticity});
  }
  r.at_most("identity", "a(f) Delta_n(t)(a*(f)) split into int V_n and a(f) int V_{n+1} a*(f), residual / (2 x quadrature)",
            excess, 1.0);
  r.at_most("kernel-weak-form", "int K(s) ds: quadrature vs weak form", mismatch, tol(c, "kernel-weak-form"));
  r.at_most("kernel-hermitian", "K(s) is self-adjoint", herm, tol(c, "kernel-hermitian"));
  r.tables.push_back(std::move(t));
}

// -- time-average ----------------------------------------------------------------

void run_time_average(const ExperimentConfig& c, ExperimentRecord& r) {
  require_sector(c, 0, 0);
  Model model(c);
  const auto h = Hamiltonian::interacting(model.space, model.pair);
  const Propagator p(h);
  Rng rng(c.seed);
  const auto quad = c.quadrature();

  const auto a = random_number_preserving(model.space, rng, 2, 3);
  const auto f = WindowFunction::bump(0.3, 0.5);
  const auto af = time_average(p, a, f, quad);
  r.at_most("pettis-bound", "||A_f|| <= ||A|| int |f|, excess", af.value.norm() - a.norm() * f.abs_integral(),
            tol(c, "pettis-bound"));
  const auto shifted = time_average(p, a, f.shifted(c.time), quad);
  r.at_most("shift-covariance", "alpha_t(A_f) = A_{f(. - t)}", (p.heisenberg(af.value, c.time) - shifted.value).norm(),
            tol(c, "shift-covariance") + af.error + shifted.error);

  const auto b = random_monomial(model.space, rng, 1);
  Table t{"dirac", {"half_width", "seminorm_gap", "quadrature_error"}, {}};
  double prev = std::numeric_limits<double>::infinity();
  double increase = 0.0;
  double last = 0.0;
  double narrowest = std::numeric_limits<double>::infinity();
  for (double w : c.widths) {
    const auto bw = time_average(p, b, WindowFunction::bump(0.0, w), quad);
    last = (bw.value - b).seminorm(c.sector);
    if (std::isfinite(prev)) increase = std::max(increase, last - prev);
    prev = last;
    narrowest = w;
    t.add({w, last, bw.error});
  }
  double modulus = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double s = narrowest * (-1.0 + 2.0 * i / 200.0);
    modulus = std::max(modulus, (p.heisenberg(b, s) - b).seminorm(c.sector));
  }
  r.at_most("dirac-monotone", "||A_{delta_k} - A||_n decreases as the window shrinks", increase, 0.0);
  r.at_most("dirac-limit", "||A_{delta_k} - A||_n <= max_{|s| <= w} ||alpha_s(A) - A||_n", last - modulus,
            tol(c, "dirac-limit"));
  r.tables.push_back(std::move(t));
}

// -- number-products -------------------------------------------------------------------

void run_number_products(const ExperimentConfig& c, ExperimentRecord& r) {
  auto space = make_fock_space(c.sites, c.nmax);
  const auto a = alternating_number_products(space, c.sites);
  Table t{"levels", {"n", "eigenvalue_distance", "seminorm", "kappa_residual"}, {}};
  double dist = 0.0;
  double norm_excess = 0.0;
  double coherence = 0.0;
  for (int n = 0; n <= c.nmax; ++n) {
    const Matrix blk = a.block(n).to_dense();
    Eigen::SelfAdjointEigenSolver<Matrix> es(blk, Eigen::EigenvaluesOnly);
    double d = 0.0;
    for (Index i = 0; i < es.eigenvalues().size(); ++i) {
      const double ev = es.eigenvalues()(i);
      d = std::max(d, std::min(std::abs(ev), std::abs(ev + 1.0)));
    }
    const double sn = a.seminorm(n);
    double k = 0.0;
    if (n >= 1) k = (realize(kappa(extract(a, n).converted(Convention::paper)), n - 1) - a.block(n - 1)).norm();
    dist = std::max(dist, d);
    norm_excess = std::max(norm_excess, sn - 1.0);
    coherence = std::max(coherence, k);
    t.add({n, d, sn, k});
  }
  r.at_most("eigenvalues", "spec(A_n) in {0, -1}", dist, tol(c, "eigenvalues"));
  r.at_most("norm", "||A_n|| <= 1, excess", norm_excess, tol(c, "norm"));
  r.at_most("kappa-coherence", "kappa_n(A_n) = A_{n-1}", coherence, tol(c, "kappa-coherence"));

  if (c.witness_modes < 1 || c.witness_modes >= c.sites || c.witness_modes + 1 > c.nmax) {
    throw ConfigError("witness_modes k needs 1 <= k < M and k + 1 <= nmax");
  }
  Rng rng(c.seed);
  double worst = std::numeric_limits<double>::infinity();
  Table probes{"separation", {"sample", "b_re", "b_im", "residual_short", "residual_long"}, {}};
  for (int s = 0; s < c.samples; ++s) {
    Complex b;
    const auto cand = random_separation_candidate(space, rng, c.witness_modes, b);
    const auto p = separation_probe(a, cand, c.witness_modes);
    worst = std::min(worst, p.max_residual());
    probes.add({s, b.real(), b.imag(), p.residual_short, p.residual_long});
  }
  r.at_least("separation", "max over witnesses of ||(A - B) psi|| / ||psi|| >= 1/2", worst,
             0.5 - tol(c, "separation"));
  r.tables.push_back(std::move(t));
  r.tables.push_back(std::move(probes));
}

// -- kms -------------------------------------------------------------------------

void run_kms(const ExperimentConfig& c, ExperimentRecord& r) {
  if (c.trap_lengths.empty() || c.betas.empty()) throw ConfigError("kms needs a trap length and at least one beta");
  Model model(c);
  const auto h = Hamiltonian::trapped(model.space, model.pair, c.trap_lengths.front());
  Rng rng(c.seed);
  Table t{"kms",
          {"beta", "sample", "exact_relative", "integral_relative", "quadrature_gap", "negative_control",
           "max_frequency", "xi"},
          {}};
  double exact = 0.0;
  double integral = 0.0;
  double qgap = 0.0;
  double negative = std::numeric_limits<double>::infinity();
  double dlogz = 0.0;
  for (double beta : c.betas) {
    const GibbsState state(h, beta);
    if (state.truncation_warning()) {
      std::ostringstream note;
      note << "beta=" << beta << ": truncation tail bound " << state.tail_bound() << " exceeds 1e-6";
      r.notes.push_back(note.str());
    }
    dlogz = std::max(dlogz, beta_derivative_gap(h, beta));
    for (int s = 0; s < c.samples; ++s) {
      FockOperator a = FockOperator::identity(model.space);
      FockOperator b = a;
      if (s == 0 && c.nmax >= 1) {
        a = annihilate(model.space, rng.one_body(c.sites));
        b = create(model.space, rng.one_body(c.sites));
      } else {
        a = random_number_preserving(model.space, rng, 2, 2);
        b = random_number_preserving(model.space, rng, 2, 2);
      }
      const auto ex = kms_exact_identity(state, a, b, 0.37 * s);
      const double wmax = max_weighted_frequency(state, a, b);
      const double xi = c.xi > 0.0 ? c.xi : (wmax > 0.0 ? 1.1 * wmax : 1.0);
      const TestFunction f(xi);
      const auto in = kms_integral_identity(state, a, b, f, c.quadrature());
      const auto neg = kms_negative_control(h, beta, a, b, f);
      const double gap_rel = in.scale > 0.0 ? in.quadrature_gap / in.scale : in.quadrature_gap;
      exact = std::max(exact, ex.relative());
      integral = std::max(integral, in.relative());
      qgap = std::max(qgap, gap_rel);
      negative = std::min(negative, neg.relative());
      t.add({beta, s, ex.relative(), in.relative(), gap_rel, neg.relative(), wmax, xi});
    }
  }
  r.at_most("exact-relative", "omega(A alpha_t(B)) = omega(alpha_{t - i beta}(B) A)", exact, tol(c, "exact-relative"));
  r.at_most("integral-relative", "int f(t) omega(A alpha_t(B)) dt = int f(t + i beta) omega(alpha_t(B) A) dt",
            integral, tol(c, "integral-relative"));
  r.at_most("quadrature-gap", "closed form vs time quadrature of the integrated condition", qgap,
            tol(c, "quadrature-gap"));
  r.at_least("negative-control", "wrong Boltzmann weight e^{-beta H / 2} breaks the condition", negative,
             tol(c, "negative-control"));
  r.at_most("log-partition-derivative", "d/dbeta log Z = -omega(H)", dlogz, tol(c, "log-partition-derivative"));
  r.tables.push_back(std::move(t));
}

// -- trap-sweep ------------------------------------------------------------------

std::vector<int> parse_sites(const std::string& text, int sites, const std::string& name) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      if (v < 0 || v >= sites) throw ConfigError("observable " + name + " refers to a site outside the chain");
      out.push_back(v);
    } catch (const std::logic_error&) {
      throw ConfigError("cannot parse observable '" + name + "'");
    }
  }
  return out;
}

NamedObservable parse_observable(const FockSpacePtr& space, const std::string& name) {
  const int sites = space->modes();
  if (name == "id") return {name, FockOperator::identity(space)};
  const auto colon = name.find(':');
  const std::string kind = name.substr(0, colon);
  const auto idx = colon == std::string::npos ? std::vector<int>{} : parse_sites(name.substr(colon + 1), sites, name);
  auto e = [&](int i) { return OneBodyVector::basis(sites, i); };
  if (kind == "n" && idx.size() == 1) return {name, number_op(space, e(idx[0]))};
  if (kind == "nn" && idx.size() == 2) return {name, number_op(space, e(idx[0])) * number_op(space, e(idx[1]))};
  if (kind == "hop" && idx.size() == 2) {
    const auto x = create(space, e(idx[0])) * annihilate(space, e(idx[1]));
    return {name, x + x.adjoint()};
  }
  throw ConfigError("unknown observable '" + name + "' (use id, n:i, nn:i,j or hop:i,j)");
}

void run_trap_sweep(const ExperimentConfig& c, ExperimentRecord& r) {
  Model model(c);
  std::vector<NamedObservable> obs;
  bool has_id = false;
  for (const auto& name : c.observables) {
    obs.push_back(parse_observable(model.space, name));
    has_id = has_id || name == "id";
  }
  if (!has_id) obs.push_back(parse_observable(model.space, "id"));
  const bool free_exact = model.pair.profile().is_zero() && c.nmax == c.sites && c.boundary == Boundary::open;
  Table t{"sweep", {"beta", "trap_length", "observable", "value_re", "value_im", "increment", "tail_bound"}, {}};
  double id_gap = 0.0;
  double free_gap = 0.0;
  for (double beta : c.betas) {
    const auto rows = trap_sweep(model.space, model.pair, obs, beta, c.trap_lengths);
    for (const auto& row : rows) {
      t.add({beta, row.trap_length, row.observable, row.value.real(), row.value.imag(), row.increment,
             row.tail_bound});
      if (row.observable == "id") id_gap = std::max(id_gap, std::abs(row.value - 1.0));
      if (free_exact && row.observable.rfind("n:", 0) == 0) {
        const int site = parse_sites(row.observable.substr(2), c.sites, row.observable).front();
        const RealMatrix h1 = kinetic_matrix(model.chain) + trap_matrix(model.chain, row.trap_length);
        free_gap = std::max(free_gap, std::abs(row.value - free_occupation(h1, beta, site)));
      }
      if (row.observable == "id" && row.tail_bound > 1e-6) {
        std::ostringstream note;
        note << "beta=" << beta << ", L=" << row.trap_length << ": truncation tail bound " << row.tail_bound
             << " exceeds 1e-6";
        r.notes.push_back(note.str());
      }
    }
  }
  r.at_most("normalization", "omega(Id) = 1", id_gap, tol(c, "normalization"));
  if (free_exact) {
    r.at_most("free-occupation", "omega(n(e_c)) = sum_k |phi_k(c)|^2 / (1 + e^{beta eps_k}) without interaction",
              free_gap, tol(c, "free-occupation"));
  }
  r.tables.push_back(std::move(t));
}

// ---------------------------------------------------------------------------

std::vector<ExperimentInfo> build_registry() {
  std::vector<ExperimentInfo> reg;
  reg.push_back({"car-check",
                 "canonical anticommutation relations on random one-body vectors",
                 {"{a(f), a*(g)} = <f, g> Id", "{a(f), a(g)} = 0", "||a*(f)|| = ||f||"},
                 {{"anticommutator-aa", 1e-12}, {"anticommutator-aastar", 1e-12}, {"creation-norm", 1e-12}},
                 [](ExperimentConfig& c) {
                   c.sites = 8;
                   c.nmax = 3;
                   c.samples = 50;
                   c.potential = "none";
                 },
                 run_car});
  reg.push_back({"coherence",
                 "restriction factor c(n,m), realize/extract and the coherence map kappa",
                 {"monomial restriction factor n!/(n-m)!", "kappa_n scales component m by (n-m)/n",
                  "coherent sequences of restrictions"},
                 {{"monomial-embed", 1e-12},
                  {"monomial-wedge", 1e-12},
                  {"realize-extract", 1e-12},
                  {"kappa-normalized", 1e-12},
                  {"kappa-paper", 1e-12},
                  {"kappa-product", 1e-12},
                  {"kappa-monomial", 1e-12}},
                 [](ExperimentConfig& c) {
                   c.sites = 6;
                   c.nmax = 4;
                   c.samples = 20;
                   c.potential = "none";
                 },
                 run_coherence});
  reg.push_back({"dyson",
                 "Dyson expansion of gamma_t = alpha_t o alpha^0_{-t} against exact propagators",
                 {"Dyson terms D_l", "term bound (|t| rate)^l / l!", "first term Delta_n(t)"},
                 {},
                 [](ExperimentConfig& c) {
                   c.sites = 6;
                   c.nmax = 3;
                   c.sector = 2;
                   c.time = 0.5;
                 },
                 run_dyson});
  reg.push_back({"clustering",
                 "translation sweep of correlators towards the factorized (n-m)/n limit",
                 {"clustering of translated correlators", "(n-m)/n coefficient", "limit vanishes for m = n"},
                 {{"final-gap", 1e-3}, {"coefficient", 1e-2}},
                 [](ExperimentConfig& c) {
                   c.sites = 64;
                   c.nmax = 2;
                   c.sector = 2;
                   c.potential = "none";
                 },
                 run_clustering});
  reg.push_back({"support-check",
                 "kernel form of [V, a#(h)] and vanishing of {a*(f), [V, a#(h)]} beyond the interaction range",
                 {"commutator kernels [V, a*(h)], [V, a(h)]", "support vanishing of the anticommutator"},
                 {{"kernel-mismatch", 1e-12}, {"separated-vanishing", 1e-12}, {"overlap-nondegenerate", 1e-6}},
                 [](ExperimentConfig& c) {
                   c.sites = 8;
                   c.nmax = 3;
                   c.potential = "box:1,2";
                   c.samples = 5;
                 },
                 run_support});
  reg.push_back({"kappa-compat",
                 "compatibility of kappa with Delta_n(t) and with alpha_t",
                 {"kappa o Delta_n = Delta_{n-1} o kappa", "kappa o alpha_t = alpha_t o kappa"},
                 {{"kappa-alpha", 1e-10}},
                 [](ExperimentConfig& c) {
                   c.sites = 6;
                   c.nmax = 3;
                   c.sector = 3;
                 },
                 run_kappa_compat});
  reg.push_back({"creation-delta",
                 "a(f) Delta_n(t)(a*(f)) identity and the one-body kernel K(s)",
                 {"a(f) Delta_n(t)(a*(f)) identity", "one-body kernel K(s)"},
                 {{"kernel-weak-form", 1e-10}, {"kernel-hermitian", 1e-12}},
                 [](ExperimentConfig& c) {
                   c.sites = 6;
                   c.nmax = 3;
                   c.sector = 2;
                   c.time = 0.5;
                   c.samples = 3;
                 },
                 run_creation_delta});
  reg.push_back({"time-average",
                 "time-averaged observables A_f and Dirac sequences",
                 {"||A_f|| <= ||A|| int |f|", "alpha_t(A_f) = A_{f(. - t)}", "A_{delta_k} -> A"},
                 {{"pettis-bound", 1e-10}, {"shift-covariance", 1e-9}, {"dirac-limit", 1e-8}},
                 [](ExperimentConfig& c) {
                   c.sites = 6;
                   c.nmax = 3;
                   c.sector = 2;
                   c.time = 0.7;
                   c.quad_tolerance = 1e-11;
                 },
                 run_time_average});
  reg.push_back({"number-products",
                 "alternating products of number operators: spectrum, coherence and separation",
                 {"A_n = sum_k (-1)^k n(f_1)..n(f_k) has eigenvalues 0 or -1", "||A_n|| <= 1",
                  "A is not a limit of polynomials"},
                 {{"eigenvalues", 1e-12}, {"norm", 1e-12}, {"kappa-coherence", 1e-12}, {"separation", 1e-12}},
                 [](ExperimentConfig& c) {
                   c.sites = 6;
                   c.nmax = 5;
                   c.samples = 100;
                   c.witness_modes = 2;
                   c.potential = "none";
                 },
                 run_number_products});
  reg.push_back({"kms",
                 "KMS condition of trapped Gibbs states, exact and integrated against test functions",
                 {"omega(A alpha_t(B)) = omega(alpha_{t - i beta}(B) A)", "integrated KMS condition",
                  "wrong-weight negative control"},
                 {{"exact-relative", 1e-10},
                  {"integral-relative", 1e-8},
                  {"quadrature-gap", 1e-6},
                  {"negative-control", 1e-2},
                  {"log-partition-derivative", 1e-6}},
                 [](ExperimentConfig& c) {
                   c.sites = 4;
                   c.nmax = 2;
                   c.samples = 4;
                   c.trap_lengths = {2.0};
                 },
                 run_kms});
  reg.push_back({"trap-sweep",
                 "Gibbs expectations as the harmonic trap widens",
                 {"trapped Gibbs states omega^beta_L", "free Fermi occupation"},
                 {{"normalization", 1e-12}, {"free-occupation", 1e-12}},
                 [](ExperimentConfig& c) {
                   c.sites = 6;
                   c.nmax = 6;
                   c.betas = {1.0};
                   c.trap_lengths = {1.0, 2.0, 4.0, 8.0};
                   c.observables = {"id", "n:3", "nn:2,3"};
                 },
                 run_trap_sweep});
  return reg;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_registry() {
  static const std::vector<ExperimentInfo> reg = build_registry();
  return reg;
}

const ExperimentInfo& find_experiment(const std::string& name) {
  for (const auto& e : experiment_registry()) {
    if (e.name == name) return e;
  }
  std::string known;
  for (const auto& e : experiment_registry()) known += (known.empty() ? "" : ", ") + e.name;
  throw ConfigError("unknown experiment '" + name + "' (known: " + known + ")");
}

ExperimentConfig default_config(const std::string& name) {
  const auto& info = find_experiment(name);
  ExperimentConfig c;
  c.experiment = name;
  info.defaults(c);
  return c;
}

json registry_json() {
  json out = json::array();
  for (const auto& e : experiment_registry()) {
    out.push_back({{"name", e.name},
                   {"summary", e.summary},
                   {"anchors", e.anchors},
                   {"tolerances", e.tolerances},
                   {"defaults", default_config(e.name).to_json()}});
  }
  return {{"schema", kSchema}, {"experiments", std::move(out)}};
}

std::string registry_text() {
  std::ostringstream out;
  for (const auto& e : experiment_registry()) {
    out << e.name << "\n  " << e.summary << "\n";
    for (const auto& a : e.anchors) out << "  anchor: " << a << "\n";
    for (const auto& [k, v] : e.tolerances) out << "  tolerance " << k << " = " << v << "\n";
  }
  return out.str();
}

double budget_entries(int sites, int nmax) {
  double total = 0.0;
  for (int n = 0; n <= nmax; ++n) total += binomial(sites, n) * binomial(sites, n);
  return total;
}

void validate(const ExperimentConfig& c) {
  const auto& info = find_experiment(c.experiment);
  if (c.sites < 1 || c.sites > 64) throw ConfigError("sites must lie in [1, 64]");
  if (c.nmax < 0 || c.nmax > c.sites) throw ConfigError("nmax must lie in [0, sites]");
  if (!(c.spacing > 0.0)) throw ConfigError("spacing must be positive");
  if (c.samples < 0) throw ConfigError("samples must be nonnegative");
  if (c.quad_nodes < 2) throw ConfigError("quadrature needs at least two nodes");
  if (!(c.quad_tolerance > 0.0) || !(c.tail_tolerance > 0.0)) throw ConfigError("tolerances must be positive");
  if (c.dyson_order < 0) throw ConfigError("dyson_order must be nonnegative (0 chooses automatically)");
  if (c.decay_length <= 0.0) throw ConfigError("decay_length must be positive");
  for (double b : c.betas) {
    if (!(b > 0.0)) throw ConfigError("beta values must be positive");
  }
  for (double l : c.trap_lengths) {
    if (!(l > 0.0)) throw ConfigError("trap lengths must be positive");
  }
  for (double w : c.widths) {
    if (!(w > 0.0)) throw ConfigError("window widths must be positive");
  }
  for (const auto& [name, v] : c.tolerances) {
    if (!info.tolerances.count(name)) throw ConfigError("experiment " + c.experiment + " has no tolerance '" + name + "'");
    if (!(v >= 0.0)) throw ConfigError("tolerance '" + name + "' must be nonnegative");
  }
  const double entries = budget_entries(c.sites, c.nmax);
  if (entries > c.budget) {
    std::ostringstream msg;
    msg << "sector blocks need " << entries << " entries, above the budget of " << c.budget;
    throw BudgetError(msg.str());
  }
}

ExperimentRecord run_experiment(const ExperimentConfig& config) {
  validate(config);
  const auto& info = find_experiment(config.experiment);
  ExperimentRecord record;
  record.config = config;
  auto& tols = record.config.tolerances;
  for (const auto& [k, v] : info.tolerances) tols.emplace(k, v);
  record.timestamp = utc_timestamp();
  const auto start = std::chrono::steady_clock::now();
  try {
    info.run(record.config, record);
  } catch (const ConfigError&) {
    throw;
  } catch (const BudgetError&) {
    throw;
  } catch (const std::exception& e) {
    record.notes.push_back(std::string("error: ") + e.what());
    record.checks.push_back({"error", "experiment ran to completion", 1.0, 0.0, 1.0, false});
  }
  record.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

void write_outputs(const ExperimentRecord& record) {
  const auto& c = record.config;
  if (!c.output_json.empty()) {
    std::ofstream out(c.output_json);
    if (!out) throw ConfigError("cannot write " + c.output_json);
    out << record.to_json().dump(2) << "\n";
  }
  if (!c.output_csv.empty()) {
    const std::filesystem::path base(c.output_csv);
    for (const auto& t : record.tables) {
      auto path = base;
      if (record.tables.size() > 1) {
        path = base.parent_path() / (base.stem().string() + "_" + t.name + base.extension().string());
      }
      std::ofstream out(path);
      if (!out) throw ConfigError("cannot write " + path.string());
      out << t.csv();
    }
  }
}

}  // namespace fermidyn
