#include <gtest/gtest.h>

#include <cmath>

#include "fermidyn/kms.hpp"
#include "fermidyn/random.hpp"
#include "fermidyn/sector_algebra.hpp"
#include "oracles/tensor_oracle.hpp"

using namespace fermidyn;

namespace {

struct Trapped {
  OneBodySpace chain;
  PairInteraction pair;
  FockSpacePtr space;
  Hamiltonian h;

  Trapped(int sites, int nmax, const std::string& potential, double trap, double spacing = 1.0)
      : chain(sites, spacing, Boundary::open),
        pair(chain, PotentialProfile::parse(sites, potential)),
        space(make_fock_space(sites, nmax)),
        h(Hamiltonian::trapped(space, pair, trap)) {}
};

FockOperator random_local(const FockSpacePtr& space, Rng& rng) {
  return random_number_preserving(space, rng, 2, 2);
}

}  // namespace

TEST(Gibbs, SingleModeFermiFactor) {
  OneBodySpace chain(1, 1.0, Boundary::open);
  PairInteraction pair(chain, PotentialProfile::zero(1));
  auto space = make_fock_space(1, 1);
  const auto h = Hamiltonian::trapped(space, pair, 3.0);
  const double eps = h.one_body()(0, 0);
  for (double beta : {0.3, 1.0, 4.0}) {
    GibbsState state(h, beta);
    const double expect = std::exp(-beta * eps) / (1.0 + std::exp(-beta * eps));
    EXPECT_NEAR(state.expectation(number_op(space, OneBodyVector::basis(1, 0))).real(), expect, 1e-14);
    EXPECT_EQ(state.tail_bound(), 0.0);
  }
}

TEST(Gibbs, PartitionMatchesDirectTrace) {
  Trapped m(6, 3, "box:1,1", 2.0);
  GibbsState state(m.h, 1.0);
  const Matrix k = (kinetic_matrix(m.chain) + trap_matrix(m.chain, 2.0)).cast<Complex>();
  double z = 0.0;
  for (int n = 0; n <= 3; ++n) {
    const Matrix hn = oracle::second_quantized_one_body(6, n, k) +
                      oracle::pair_energy(6, n, [&](int a, int b) { return m.pair.pair(a, b); });
    Eigen::SelfAdjointEigenSolver<Matrix> es(hn);
    for (Index i = 0; i < es.eigenvalues().size(); ++i) z += std::exp(-es.eigenvalues()(i));
  }
  EXPECT_NEAR(state.log_partition(), std::log(z), 1e-12);
}

TEST(Gibbs, StateAxioms) {
  Trapped m(5, 3, "gauss:0.8,1", 2.0);
  GibbsState state(m.h, 0.7);
  EXPECT_NEAR(std::abs(state.expectation(FockOperator::identity(m.space)) - 1.0), 0.0, 1e-14);
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    const auto a = random_local(m.space, rng);
    EXPECT_LE(std::abs(state.expectation(a)), a.norm() + 1e-12);
    const Complex pos = state.expectation(a.adjoint() * a);
    EXPECT_GE(pos.real(), -1e-12);
    EXPECT_LE(std::abs(pos.imag()), 1e-12 * std::max(1.0, pos.real()));
  }
}

TEST(Gibbs, LowTemperatureSelectsGroundState) {
  Trapped m(4, 2, "box:1,1", 1.5);
  GibbsState state(m.h, 200.0);
  const auto& p = state.propagator();
  int best = 0;
  for (int n = 1; n <= 2; ++n) {
    if (p.energies(n)(0) < p.energies(best)(0)) best = n;
  }
  const Vector g = p.eigenvectors(best).col(0);
  FockOperator proj(m.space, 0);
  proj.set_block(best, Block(Matrix(g * g.adjoint())));
  EXPECT_NEAR(state.expectation(proj).real(), 1.0, 1e-10);
}

TEST(Gibbs, TailBoundAndStrictMode) {
  Trapped m(6, 1, "none", 2.0);
  GibbsState loose(m.h, 0.2);
  EXPECT_TRUE(loose.truncation_warning());
  EXPECT_THROW(GibbsState(m.h, 0.2, true), TruncationWarning);
  Trapped full(6, 6, "none", 2.0);
  EXPECT_EQ(GibbsState(full.h, 0.2).tail_bound(), 0.0);
  // The bound dominates the actual missing weight.
  GibbsState truncated(m.h, 1.0);
  GibbsState complete(full.h, 1.0);
  const double missing = 1.0 - std::exp(truncated.log_partition() - complete.log_partition());
  const double bound = truncated.tail_bound() / (1.0 + truncated.tail_bound());
  EXPECT_LE(missing, bound + 1e-14);
}

TEST(Gibbs, BetaDerivativeOfLogZ) {
  Trapped m(5, 3, "box:1,1", 2.0);
  for (double beta : {0.5, 1.0, 3.0}) EXPECT_LE(beta_derivative_gap(m.h, beta), 1e-6);
}

TEST(TwoPoint, IdentityPositivityAndStationarity) {
  Trapped m(4, 2, "box:1,1", 2.0);
  GibbsState state(m.h, 1.0);
  Rng rng(6);
  const auto a = random_local(m.space, rng);
  const auto id = FockOperator::identity(m.space);
  for (double t : {0.0, 0.7, -2.0}) {
    EXPECT_LE(std::abs(two_point(state, a, id, t) - state.expectation(a)), 1e-12);
    EXPECT_LE(std::abs(state.expectation(state.propagator().heisenberg(a, t)) - state.expectation(a)), 1e-12);
  }
  const Complex aa = two_point(state, a, a.adjoint(), 0.0);
  EXPECT_GE(aa.real(), -1e-12);
  EXPECT_LE(std::abs(aa.imag()), 1e-12);
}

TEST(TwoPoint, MatchesDirectTrace) {
  Trapped m(4, 2, "gauss:1,1", 2.0);
  GibbsState state(m.h, 0.8);
  Rng rng(7);
  const auto a = random_local(m.space, rng);
  const auto b = random_local(m.space, rng);
  const double t = 0.9;
  const auto bt = state.propagator().heisenberg(b, t);
  const auto ab = a * bt;
  EXPECT_LE(std::abs(two_point(state, a, b, t) - state.expectation(ab)), 1e-12);
  // Graded pair: a(f) against a*(g).
  const auto f = rng.one_body(4);
  const auto g = rng.one_body(4);
  const auto af = annihilate(m.space, f);
  const auto ag = create(m.space, g);
  const auto prod = af * state.propagator().heisenberg(ag, t);
  // Top sector of the product is truncated; compare on the full-weight sectors.
  Complex direct = 0.0;
  const auto& p = state.propagator();
  for (int n = 0; n < 2; ++n) {
    const Matrix fr = p.eigenvectors(n).adjoint() * prod.block(n).to_dense() * p.eigenvectors(n);
    for (Index j = 0; j < fr.rows(); ++j) direct += state.weights(n)(j) * fr(j, j);
  }
  direct /= state.shifted_partition();
  EXPECT_LE(std::abs(two_point(state, af, ag, t) - direct), 1e-12);
  EXPECT_EQ(two_point(state, af, af, t), Complex(0.0));
}

TEST(KmsExact, IdentityHolds) {
  Trapped m(4, 2, "box:1,1", 2.0);
  Rng rng(8);
  for (double beta : {0.5, 1.0, 2.0, 10.0}) {
    GibbsState state(m.h, beta);
    for (int i = 0; i < 4; ++i) {
      const auto a = random_local(m.space, rng);
      const auto b = random_local(m.space, rng);
      const auto r = kms_exact_identity(state, a, b, 0.37 * i);
      EXPECT_LE(r.relative(), 1e-10) << beta;
    }
  }
}

TEST(KmsExact, TrivialCases) {
  Trapped m(4, 2, "box:1,1", 2.0);
  GibbsState state(m.h, 1.0);
  const auto id = FockOperator::identity(m.space);
  const auto r = kms_exact_identity(state, id, id, 0.0);
  EXPECT_NEAR(std::abs(r.lhs - 1.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(r.rhs - 1.0), 0.0, 1e-14);
  const auto b = number_op(m.space, OneBodyVector::basis(4, 1));
  const auto r2 = kms_exact_identity(state, id, b, 1.1);
  EXPECT_LE(std::abs(r2.lhs - state.expectation(b)), 1e-13);
  EXPECT_LE(std::abs(r2.rhs - state.expectation(b)), 1e-13);
}

TEST(KmsExact, OverflowGuard) {
  Trapped m(4, 2, "box:1,1", 2.0);
  GibbsState state(m.h, 200.0);
  Rng rng(9);
  const auto a = random_local(m.space, rng);
  EXPECT_THROW(kms_exact_identity(state, a, a, 0.0), OverflowGuard);
}

TEST(TestFunctionTest, FourierPairAndDecay) {
  TestFunction f(5.0);
  EXPECT_DOUBLE_EQ(f.fourier(0.0), 1.0);
  EXPECT_EQ(f.fourier(5.0), 0.0);
  EXPECT_EQ(f.fourier(-6.0), 0.0);
  // f real and even because fhat is real and even.
  EXPECT_LE(std::abs(f(1.3).imag()), 1e-15);
  EXPECT_LE(std::abs(f(1.3) - f(-1.3)), 1e-15);
  // int f(t) e^{-i xi t} dt recovers fhat(xi).
  const double radius = f.decay_radius(0.0, 1e-13 * std::abs(f(0.0)));
  const auto r = composite_gauss_legendre(16, 2000, -radius, radius);
  for (double xi : {0.0, 1.0, 3.7}) {
    Complex acc = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) acc += r.weights[i] * f(r.nodes[i]) * std::polar(1.0, -xi * r.nodes[i]);
    EXPECT_NEAR(std::abs(acc - f.fourier(xi)), 0.0, 1e-9) << xi;
  }
}

TEST(KmsIntegral, ClosedFormResidualAndQuadratureAgreement) {
  Trapped m(4, 2, "box:1,1", 2.0);
  Rng rng(10);
  for (double beta : {0.5, 1.0}) {
    GibbsState state(m.h, beta);
    const auto a = random_local(m.space, rng);
    const auto b = random_local(m.space, rng);
    TestFunction f(1.1 * max_weighted_frequency(state, a, b));
    const auto r = kms_integral_identity(state, a, b, f, {});
    EXPECT_LE(r.relative(), 1e-8);
    EXPECT_LE(r.quadrature_gap, 1e-6 * r.scale);
  }
}

TEST(KmsIntegral, IdentityObservablesAndCoverage) {
  Trapped m(4, 2, "box:1,1", 2.0);
  GibbsState state(m.h, 1.0);
  const auto id = FockOperator::identity(m.space);
  TestFunction f(2.0);
  const auto r = kms_integral_identity(state, id, id, f, {}, false);
  EXPECT_NEAR(std::abs(r.lhs - 1.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(r.rhs - 1.0), 0.0, 1e-14);
  Rng rng(11);
  const auto a = random_local(m.space, rng);
  const auto b = random_local(m.space, rng);
  TestFunction narrow(0.5 * max_weighted_frequency(state, a, b));
  EXPECT_THROW(kms_integral_identity(state, a, b, narrow, {}, false), FrequencyCoverageError);
}

TEST(KmsIntegral, WrongWeightIsDetected) {
  Trapped m(4, 2, "box:1,1", 2.0);
  Rng rng(12);
  const auto a = random_local(m.space, rng);
  const auto b = random_local(m.space, rng);
  GibbsState state(m.h, 1.0);
  TestFunction f(1.1 * max_weighted_frequency(state, a, b));
  const auto r = kms_negative_control(m.h, 1.0, a, b, f);
  EXPECT_GE(r.relative(), 1e-2);
}

TEST(TrapSweep, IdentityAndFreeOccupation) {
  const int sites = 6;
  OneBodySpace chain(sites, 1.0, Boundary::open);
  PairInteraction none(chain, PotentialProfile::zero(sites));
  auto space = make_fock_space(sites, sites);
  std::vector<NamedObservable> obs{{"id", FockOperator::identity(space)},
                                   {"n(e_3)", number_op(space, OneBodyVector::basis(sites, 3))}};
  const std::vector<double> lengths{1.0, 2.0, 4.0, 8.0};
  const auto rows = trap_sweep(space, none, obs, 1.0, lengths);
  ASSERT_EQ(rows.size(), 8u);
  for (const auto& row : rows) {
    if (row.observable == "id") {
      EXPECT_NEAR(std::abs(row.value - 1.0), 0.0, 1e-13);
    } else {
      const RealMatrix h1 = kinetic_matrix(chain) + trap_matrix(chain, row.trap_length);
      EXPECT_NEAR(row.value.real(), free_occupation(h1, 1.0, 3), 1e-12) << row.trap_length;
    }
    EXPECT_EQ(row.tail_bound, 0.0);
  }
  EXPECT_EQ(rows[1].increment, 0.0);
  EXPECT_GT(rows[3].increment, 0.0);
}
