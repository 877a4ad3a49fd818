// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "fermidyn/experiments.hpp"
#include "fermidyn/kms.hpp"
#include "fermidyn/random.hpp"
#include "fermidyn/sector_algebra.hpp"
#include "oracles/tensor_oracle.hpp"

using namespace fermidyn;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [violated: " << what << "]";
    }
  }
};

struct Criterion {
  int id;
  std::string name;
  double time_limit;
  std::function<void(Outcome&)> body;
};

Matrix ketbra(const OneBodyVector& f, const OneBodyVector& g) { return f.coefficients() * g.coefficients().adjoint(); }

struct Model {
  OneBodySpace chain;
  PairInteraction pair;
  FockSpacePtr space;
  Hamiltonian h;

  Model(int sites, int nmax, const std::string& potential)
      : chain(sites, 1.0, Boundary::open),
        pair(chain, PotentialProfile::parse(sites, potential)),
        space(make_fock_space(sites, nmax)),
        h(Hamiltonian::interacting(space, pair)) {}

  auto pair_fn() const {
    return [this](int a, int b) { return pair.pair(a, b); };
  }
  Matrix oracle_free(int n) const {
    return oracle::second_quantized_one_body(chain.sites(), n, kinetic_matrix(chain).cast<Complex>());
  }
  Matrix oracle_full(int n) const { return oracle_free(n) + oracle::pair_energy(chain.sites(), n, pair_fn()); }
  double oracle_interaction_norm(int n) const {
    return oracle::tensor_pair_diagonal(chain.sites(), n, pair_fn()).cwiseAbs().maxCoeff();
  }
  // alpha_t o alpha^0_{-t} on a block F_n -> F_{n+grade} from plain matrix exponentials.
  Matrix oracle_gamma(const Matrix& a, int n, int grade, double t) const {
    const int m = n + grade;
    return oracle::unitary(oracle_full(m), t) * oracle::unitary(oracle_free(m), -t) * a *
           oracle::unitary(oracle_free(n), t) * oracle::unitary(oracle_full(n), -t);
  }
};

FockOperator monomial(const FockSpacePtr& space, Rng& rng, int degree, std::vector<Matrix>* ks = nullptr) {
  std::vector<OneBodyVector> fs;
  std::vector<OneBodyVector> gs;
  for (int i = 0; i < degree; ++i) {
    fs.push_back(rng.one_body(space->modes()));
    gs.push_back(rng.one_body(space->modes()));
    if (ks) ks->push_back(ketbra(fs.back(), gs.back()));
  }
  return normal_monomial(space, fs, gs);
}

// -- 1 ------------------------------------------------------------------------

void car_suite(Outcome& o) {
  auto space = make_fock_space(8, 3);
  Rng rng(1001);
  double aa = 0.0;
  double mixed = 0.0;
  double norm_gap = 0.0;
  for (int s = 0; s < 50; ++s) {
    const auto f = rng.one_body(8);
    const auto g = rng.one_body(8);
    const auto af = annihilate(space, f);
    const auto cg = create(space, g);
    aa = std::max(aa, anticommutator(af, annihilate(space, g)).norm());
    const auto m = anticommutator(af, cg);
    for (int n = 0; n < 3; ++n) {
      const Matrix d = m.block(n).to_dense() - inner(f, g) * Matrix::Identity(space->dim(n), space->dim(n));
      mixed = std::max(mixed, spectral_norm(d) / (f.norm() * g.norm()));
    }
    // Creation blocks against the tensor-space definition.
    for (int n = 0; n < 3; ++n) {
      const Matrix ref = oracle::creation_block(8, n, f.coefficients());
      norm_gap = std::max(norm_gap, (create(space, f).block(n).to_dense() - ref).cwiseAbs().maxCoeff());
    }
    norm_gap = std::max(norm_gap, std::abs(create(space, f).norm() - f.norm()));
  }
  o.detail << "max ||{a,a}||=" << aa << ", max ||{a,a*}-<f,g>||/(|f||g|)=" << mixed
           << ", max |‖a*(f)‖-‖f‖| (and oracle block gap)=" << norm_gap;
  o.require(aa <= 1e-12, "||{a(f),a(g)}|| <= 1e-12");
  o.require(mixed <= 1e-12, "||{a(f),a*(g)} - <f,g>|| <= 1e-12 ||f|| ||g||");
  o.require(norm_gap <= 1e-12, "||a*(f)|| = ||f|| to 1e-12");
}

// -- 2, 3 ----------------------------------------------------------------------

double coherence_residual() {
  auto space = make_fock_space(6, 4);
  Rng rng(1003);
  double worst = 0.0;
  for (int s = 0; s < 20; ++s) {
    const auto a = random_number_preserving(space, rng, 2, 3);
    for (int n = 1; n <= 4; ++n) {
      const auto d = extract(a, n);
      worst = std::max(worst, (realize(kappa(d), n - 1) - a.block(n - 1)).norm());
      worst = std::max(worst, (realize(kappa(d.converted(Convention::paper)), n - 1) - a.block(n - 1)).norm());
    }
  }
  return worst;
}

void normalization(Outcome& o) {
  double embed_gap = 0.0;
  double wedge_gap = 0.0;
  Rng rng(1002);
  for (int modes = 1; modes <= 6; ++modes) {
    const int nmax = std::min(4, modes);
    auto space = make_fock_space(modes, nmax);
    for (int m = 0; m <= nmax; ++m) {
      std::vector<Matrix> ks;
      const auto mono = monomial(space, rng, m, &ks);
      const Matrix comp = mono.block(m).to_dense() / factorial(m);
      const double sign = (m * (m - 1) / 2) % 2 ? -1.0 : 1.0;
      for (int n = m; n <= nmax; ++n) {
        const Matrix restricted = mono.block(n).to_dense();
        const double scale = std::max(1.0, spectral_norm(restricted));
        // c(n,m) embed(C, n) with embed from the tensor-space compression.
        const Matrix via_embed = falling_factorial(n, m) * oracle::embed(modes, comp, m, n);
        embed_gap = std::max(embed_gap, spectral_norm(restricted - via_embed) / scale);
        if (m >= 1) {
          auto full = ks;
          while (static_cast<int>(full.size()) < n) full.push_back(Matrix::Identity(modes, modes));
          const Matrix wedge = falling_factorial(n, m) * sign * oracle::wedge_operator(modes, full);
          wedge_gap = std::max(wedge_gap, spectral_norm(restricted - wedge) / scale);
        }
      }
    }
  }
  const double coherence = coherence_residual();
  o.detail << "c(n,m)=n!/(n-m)!: embed gap=" << embed_gap << ", wedge gap (sign (-1)^{m(m-1)/2})=" << wedge_gap
           << ", kappa-coherence with that factor=" << coherence;
  o.require(embed_gap <= 1e-12, "restriction = c(n,m) embed(C,n) to 1e-12");
  o.require(wedge_gap <= 1e-12, "restriction = c(n,m) sign wedge to 1e-12");
  o.require(coherence <= 1e-12, "kappa-coherence passes with c(n,m)");
}

void coherence(Outcome& o) {
  const double worst = coherence_residual();
  o.detail << "20 polynomials, n <= 4, both conventions: max ||realize(kappa(extract(A,n)),n-1) - A|F_{n-1}||="
           << worst;
  o.require(worst <= 1e-12, "residual <= 1e-12");
}

// -- 4 -------------------------------------------------------------------------

void number_products(Outcome& o) {
  auto space = make_fock_space(6, 5);
  const auto a = alternating_number_products(space, 6);
  double dist = 0.0;
  double norm = 0.0;
  double coherence = 0.0;
  for (int n = 0; n <= 5; ++n) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a.block(n).to_dense(), Eigen::EigenvaluesOnly);
    for (Index i = 0; i < es.eigenvalues().size(); ++i) {
      const double ev = es.eigenvalues()(i);
      dist = std::max(dist, std::min(std::abs(ev), std::abs(ev + 1.0)));
    }
    norm = std::max(norm, a.seminorm(n));
    if (n >= 1) {
      coherence = std::max(coherence,
                           (realize(kappa(extract(a, n).converted(Convention::paper)), n - 1) - a.block(n - 1)).norm());
    }
  }
  Rng rng(1004);
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 100; ++s) {
    Complex b;
    const auto cand = random_separation_candidate(space, rng, 2, b);
    worst = std::min(worst, separation_probe(a, cand, 2).max_residual());
  }
  // max(|b|, |1 + b|) >= 1/2 on a grid of complex b.
  double grid = std::numeric_limits<double>::infinity();
  for (int i = -200; i <= 200; ++i) {
    for (int j = -200; j <= 200; ++j) {
      const Complex b(i / 100.0, j / 100.0);
      grid = std::min(grid, std::max(std::abs(b), std::abs(1.0 + b)));
    }
  }
  o.detail << "eigenvalue distance to {0,-1}=" << dist << ", max ||A_n||=" << norm << ", kappa residual=" << coherence
           << ", min separation over 100 candidates=" << worst << ", grid min max(|b|,|1+b|)=" << grid;
  o.require(dist <= 1e-12, "eigenvalues in {0,-1} within 1e-12");
  o.require(norm <= 1.0 + 1e-12, "||A_n|| <= 1");
  o.require(coherence <= 1e-12, "kappa-coherence exact");
  o.require(worst >= 0.5 - 1e-12, "separation >= 1/2 - 1e-12");
  o.require(grid >= 0.5 - 1e-15, "grid oracle");
}

// -- 5, 6 ----------------------------------------------------------------------

void dyson(Outcome& o, int grade) {
  const Model m(6, 3, "box:1,1");
  const int n = 2;
  const double t = 0.5;
  Rng rng(1005 + grade);
  Matrix seed;
  double seed_norm = 0.0;
  if (grade == 0) {
    seed = random_number_preserving(m.space, rng, 2, 3).block(n).to_dense();
    seed_norm = spectral_norm(seed);
  } else {
    const auto f = rng.one_body(6);
    seed = oracle::creation_block(6, n, f.coefficients());
    seed_norm = f.norm();
  }
  const double rate = grade == 0 ? 2.0 * m.oracle_interaction_norm(n)
                                 : m.oracle_interaction_norm(n) + m.oracle_interaction_norm(n + 1);
  // Smallest L with (|t| rate)^{L+1} / (L+1)! ||A|| < 1e-6.
  int order = 0;
  while (std::pow(std::abs(t) * rate, order + 1) / std::tgamma(order + 2.0) * seed_norm >= 1e-6) ++order;
  DysonSeries series(m.h, n, grade);
  order = std::max(order, series.order_for(t, seed_norm, 1e-6));
  const auto res = series.sum(seed, t, order, {}, 1e-6);
  const double err = spectral_norm(res.sum - m.oracle_gamma(seed, n, grade, t));
  double worst_term = 0.0;
  for (const auto& term : res.terms) {
    const double bound = std::pow(std::abs(t) * rate, term.order) / std::tgamma(term.order + 1.0) * seed_norm;
    worst_term = std::max(worst_term, term.norm / (bound * (1.0 + 1e-12) + term.error));
  }
  o.detail << "L=" << order << ", rate=" << rate << ", ||sum - gamma_t||=" << err << ", tail=" << res.tail_bound
           << ", quadrature=" << res.quadrature_error << ", max ||D_l|| / bound=" << worst_term;
  o.require(res.tail_bound < 1e-6, "tail bound < 1e-6");
  o.require(err <= res.tail_bound + res.quadrature_error, "error <= tail + quadrature");
  o.require(worst_term <= 1.0, "per-term bounds");
}

// -- 7 -------------------------------------------------------------------------

void kernels(Outcome& o) {
  const Model m(8, 3, "box:1,2");
  Rng rng(1007);
  double mismatch = 0.0;
  double first_quantized = 0.0;
  for (int s = 0; s < 5; ++s) {
    const auto h = rng.one_body(8);
    const auto k = commutator_kernels(m.h, h, std::numeric_limits<double>::infinity());
    mismatch = std::max(mismatch, k.mismatch);
    for (int n = 0; n < 3; ++n) {
      const Matrix ref = oracle::create_commutator_first_quantized(8, n, h.coefficients(), m.pair_fn());
      first_quantized = std::max(first_quantized, (k.create.block(n).to_dense() - ref).cwiseAbs().maxCoeff());
    }
  }
  const std::vector<Complex> window{rng.complex_normal(), rng.complex_normal(), rng.complex_normal()};
  const auto probe = OneBodyVector::localized(8, 1, window);
  double separated = 0.0;
  double overlapping = 0.0;
  int separated_count = 0;
  for (int c = 1; c <= 6; ++c) {
    const auto r = support_vanishing_check(m.h, OneBodyVector::localized(8, c, window), probe);
    if (r.separated()) {
      separated = std::max(separated, r.norm());
      ++separated_count;
    } else {
      overlapping = std::max(overlapping, r.norm());
    }
  }
  o.detail << "kernel vs matrix commutator=" << mismatch << ", kernel vs first-quantized oracle=" << first_quantized
           << ", separated configs=" << separated_count << " max norm=" << separated
           << ", overlapping max norm=" << overlapping;
  o.require(mismatch <= 1e-12, "kernel matches commutator to 1e-12");
  o.require(first_quantized <= 1e-12, "kernel matches first-quantized oracle");
  o.require(separated_count > 0 && separated <= 1e-12, "anticommutator vanishes beyond r_V");
  o.require(overlapping > 1e-6, "nondegenerate for overlapping supports");
}

// -- 8 -------------------------------------------------------------------------

void compat(Outcome& o) {
  const Model m(6, 3, "box:1,1");
  const Propagator p(m.h);
  Rng rng(1008);
  const auto a = monomial(m.space, rng, 1) + monomial(m.space, rng, 2);
  const auto b = monomial(m.space, rng, 2);
  bool ok = true;
  for (double t : {0.2, 0.4}) {
    const auto d = kappa_delta_compat(m.h, a, t, 3, {});
    const auto al = kappa_alpha_compat(p, b, t, 3);
    o.detail << "t=" << t << ": delta residual=" << d.residual << " (quadrature " << d.quadrature_error
             << "), alpha residual=" << al.residual << "; ";
    ok = ok && d.residual <= 2.0 * d.quadrature_error && al.residual <= 1e-10;
  }
  o.require(ok, "delta residual <= 2 x quadrature and alpha residual <= 1e-10");
}

// -- 9 -------------------------------------------------------------------------

void creation_delta(Outcome& o) {
  const Model m(6, 3, "box:1,1");
  Rng rng(1009);
  const auto f = rng.one_body(6);
  const auto r = creation_delta_identity(m.h, f, 0.5, 2, {});
  o.detail << "identity residual=" << r.identity_residual << " (quadrature " << r.quadrature_error
           << "), K weak-form mismatch=" << r.kernel_mismatch;
  o.require(r.identity_residual <= 2.0 * r.quadrature_error, "identity residual <= 2 x quadrature");
  o.require(r.kernel_mismatch <= 1e-10, "weak-form kernel match <= 1e-10");
}

// -- 10 ------------------------------------------------------------------------

void time_averages(Outcome& o) {
  const Model m(6, 3, "box:1,1");
  const Propagator p(m.h);
  Rng rng(1010);
  const auto a = random_number_preserving(m.space, rng, 2, 3);
  const auto f = WindowFunction::bump(0.3, 0.5);
  const auto af = time_average(p, a, f, {16, 1e-11});
  const double slack = af.value.norm() - a.norm() * f.abs_integral();
  const auto b = monomial(m.space, rng, 1);
  const int n = 2;
  double prev = std::numeric_limits<double>::infinity();
  bool decreasing = true;
  for (double w : {0.2, 0.1, 0.05}) {
    const double gap = (time_average(p, b, WindowFunction::bump(0.0, w), {16, 1e-11}).value - b).seminorm(n);
    decreasing = decreasing && gap < prev;
    o.detail << "w=" << w << ": " << gap << "; ";
    prev = gap;
  }
  double modulus = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double s = -0.05 + 0.1 * i / 200.0;
    modulus = std::max(modulus, (p.heisenberg(b, s) - b).seminorm(n));
  }
  o.detail << "||A_f|| - ||A|| int|f|=" << slack << ", max_{|s|<=0.05} ||alpha_s(A)-A||_n=" << modulus;
  o.require(slack <= 1e-10, "||A_f|| <= ||A|| int |f|");
  o.require(decreasing, "Dirac gaps decrease");
  o.require(prev <= modulus + 1e-8, "final gap <= modulus + 1e-8");
}

// -- 11 ------------------------------------------------------------------------

void kms(Outcome& o) {
  const OneBodySpace chain(4, 1.0, Boundary::open);
  const PairInteraction pair(chain, PotentialProfile::parse(4, "box:1,1"));
  auto space = make_fock_space(4, 2);
  const auto h = Hamiltonian::trapped(space, pair, 2.0);
  Rng rng(1011);
  double exact = 0.0;
  double integral = 0.0;
  double negative = std::numeric_limits<double>::infinity();
  bool covered = true;
  for (double beta : {0.5, 1.0, 2.0}) {
    const GibbsState state(h, beta);
    for (int s = 0; s < 3; ++s) {
      const auto a = random_number_preserving(space, rng, 2, 2);
      const auto b = random_number_preserving(space, rng, 2, 2);
      exact = std::max(exact, kms_exact_identity(state, a, b, 0.3 * s).relative());
      const double wmax = max_weighted_frequency(state, a, b);
      const TestFunction f(1.1 * wmax);
      covered = covered && wmax < f.xi_max();
      const auto in = kms_integral_identity(state, a, b, f, {});
      integral = std::max(integral, in.relative());
      negative = std::min(negative, kms_negative_control(h, beta, a, b, f).relative());
    }
  }
  o.detail << "exact relative=" << exact << ", integral relative=" << integral
           << ", min negative-control relative=" << negative;
  o.require(exact <= 1e-10, "exact identity <= 1e-10 relative");
  o.require(covered && integral <= 1e-8, "integral identity <= 1e-8 with coverage");
  o.require(negative >= 1e-2, "negative control >= 1e-2");
}

// -- 12 ------------------------------------------------------------------------

void clustering(Outcome& o) {
  auto c = default_config("clustering");
  c.sites = 64;
  c.nmax = 2;
  c.sector = 2;
  c.separations = {8, 16, 24, 32};
  const auto r = run_experiment(c);
  for (const auto* name : {"gap-monotone", "final-gap", "coefficient", "top-component"}) {
    const auto* check = r.find(name);
    o.require(check != nullptr, std::string("check ") + name + " present");
    if (!check) continue;
    o.detail << name << "=" << check->value << " (bound " << check->bound << "); ";
    o.require(check->pass, name);
  }
  o.require(r.find("final-gap") && r.find("final-gap")->bound == 1e-3, "final gap bound 1e-3");
  o.require(r.find("coefficient") && r.find("coefficient")->bound == 1e-2, "coefficient within 1%");
}

// -- 13 ------------------------------------------------------------------------

void determinism(Outcome& o) {
  for (const auto& info : experiment_registry()) {
    const auto c = default_config(info.name);
    const auto a = run_experiment(c);
    const auto b = run_experiment(c);
    const bool same = same_results(a, b);
    o.detail << info.name << (same ? " ok; " : " DIFFERS; ");
    o.require(same, info.name + " bit-for-bit");
  }
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "CAR suite", 10.0, car_suite},
      {2, "wedge/monomial normalization", 30.0, normalization},
      {3, "coherence", 30.0, coherence},
      {4, "alternating number-operator products", 20.0, number_products},
      {5, "Dyson vs exact, grade 0", 60.0, [](Outcome& o) { dyson(o, 0); }},
      {6, "Dyson vs exact, grade +1", 60.0, [](Outcome& o) { dyson(o, 1); }},
      {7, "commutator kernels and support vanishing", 30.0, kernels},
      {8, "kappa compatibility of Delta and alpha", 60.0, compat},
      {9, "a(f) Delta(a*(f)) identity and K kernel", 30.0, creation_delta},
      {10, "time averages", 60.0, time_averages},
      {11, "KMS", 60.0, kms},
      {12, "clustering sweep", 120.0, clustering},
      {13, "determinism", 120.0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs >= c.time_limit) {
      o.ok = false;
      o.detail << " [runtime limit " << c.time_limit << " s exceeded]";
    }
    if (!o.ok) ++failures;
    std::printf("%s %2d %s (%.2f s / %.0f s): %s\n", o.ok ? "PASS" : "FAIL", c.id, c.name.c_str(), secs, c.time_limit,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
