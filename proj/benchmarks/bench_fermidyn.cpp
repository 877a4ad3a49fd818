#include <benchmark/benchmark.h>

#include <limits>

#include "fermidyn/dynamics.hpp"
#include "fermidyn/kms.hpp"
#include "fermidyn/random.hpp"
#include "fermidyn/sector_algebra.hpp"

using namespace fermidyn;

namespace {

struct Setup {
  OneBodySpace chain;
  PairInteraction pair;
  FockSpacePtr space;
  Hamiltonian h;

  Setup(int sites, int nmax)
      : chain(sites, 1.0, Boundary::open),
        pair(chain, PotentialProfile::parse(sites, "box:1,1")),
        space(make_fock_space(sites, nmax)),
        h(Hamiltonian::interacting(space, pair)) {}
};

void BM_Create(benchmark::State& state) {
  const int modes = static_cast<int>(state.range(0));
  auto space = make_fock_space(modes, 3);
  Rng rng(1);
  const auto f = rng.one_body(modes);
  for (auto _ : state) benchmark::DoNotOptimize(create(space, f));
}
BENCHMARK(BM_Create)->Arg(8)->Arg(12)->Arg(16);

void BM_ExtractKappa(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto space = make_fock_space(6, 4);
  Rng rng(2);
  const auto a = random_number_preserving(space, rng, 2, 3);
  for (auto _ : state) benchmark::DoNotOptimize(realize(kappa(extract(a, n)), n - 1));
}
BENCHMARK(BM_ExtractKappa)->DenseRange(1, 4);

void BM_Propagator(benchmark::State& state) {
  const Setup s(static_cast<int>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(Propagator(s.h));
}
BENCHMARK(BM_Propagator)->Arg(6)->Arg(8)->Arg(10);

void BM_Heisenberg(benchmark::State& state) {
  const Setup s(8, 3);
  const Propagator p(s.h);
  Rng rng(3);
  const auto a = random_number_preserving(s.space, rng, 2, 3);
  for (auto _ : state) benchmark::DoNotOptimize(p.heisenberg(a, 0.5));
}
BENCHMARK(BM_Heisenberg);

void BM_Dyson(benchmark::State& state) {
  const Setup s(6, 3);
  Rng rng(4);
  const Matrix seed = random_number_preserving(s.space, rng, 2, 3).block(2).to_dense();
  DysonSeries series(s.h, 2, 0);
  const int order = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(series.sum(seed, 0.5, order, {}, std::numeric_limits<double>::infinity()));
}
BENCHMARK(BM_Dyson)->Arg(4)->Arg(8)->Arg(14)->Unit(benchmark::kMillisecond);

void BM_KmsIntegral(benchmark::State& state) {
  const OneBodySpace chain(4, 1.0, Boundary::open);
  const PairInteraction pair(chain, PotentialProfile::parse(4, "box:1,1"));
  auto space = make_fock_space(4, 2);
  const auto h = Hamiltonian::trapped(space, pair, 2.0);
  const GibbsState gibbs(h, 1.0);
  Rng rng(5);
  const auto a = random_number_preserving(space, rng, 2, 2);
  const auto b = random_number_preserving(space, rng, 2, 2);
  const TestFunction f(1.1 * max_weighted_frequency(gibbs, a, b));
  const bool quadrature = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(kms_integral_identity(gibbs, a, b, f, {}, quadrature));
}
BENCHMARK(BM_KmsIntegral)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_TestFunction(benchmark::State& state) {
  const TestFunction f(10.0);
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(f(t, 1.0));
    t += 1e-3;
  }
}
BENCHMARK(BM_TestFunction);

}  // namespace

BENCHMARK_MAIN();
