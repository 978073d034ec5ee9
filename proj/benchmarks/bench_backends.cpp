#include <benchmark/benchmark.h>

#include <random>

#include "sysrisk/analytic.hpp"
#include "sysrisk/pathwise.hpp"
#include "sysrisk/simulate.hpp"

using namespace sysrisk;

namespace {

analytic::ConstRates rates(std::size_t k) {
  std::mt19937_64 gen(k);
  std::uniform_real_distribution<double> u(0.02, 0.2);
  analytic::ConstRates r{0.01, {}};
  for (std::size_t i = 0; i < k; ++i) r.alphas.push_back(u(gen));
  return r;
}

MarketModel model_of(const analytic::ConstRates& r, double eps) {
  MarketModel m;
  m.stress_intensity = IntensitySpec::constant(r.alpha0);
  for (double a : r.alphas) m.bank_intensities.push_back(IntensitySpec::constant(a));
  m.epsilon = eps;
  return m;
}

void BM_PermutationSum(benchmark::State& state) {
  const auto r = rates(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(analytic::failure_prob_perm(r, 1.0));
}
BENCHMARK(BM_PermutationSum)->DenseRange(2, 9);

void BM_SubsetRecursion(benchmark::State& state) {
  const auto r = rates(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(analytic::failure_prob_dp(r, 1.0));
}
BENCHMARK(BM_SubsetRecursion)->DenseRange(2, 20, 2);

void BM_Bounds(benchmark::State& state) {
  const auto r = rates(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(analytic::failure_bounds(r, 1.0).upper());
}
BENCHMARK(BM_Bounds)->Arg(4)->Arg(12)->Arg(20);

void BM_NestedQuadrature(benchmark::State& state) {
  MarketModel m = model_of(rates(static_cast<std::size_t>(state.range(0))), 0.5);
  for (auto& spec : m.bank_intensities) {
    spec = IntensitySpec::piecewise({0.0, 5.0, 10.0}, {spec.constant_rate(), 2.0 * spec.constant_rate(), 0.1});
  }
  const pathwise::FrozenModel fm(m);
  for (auto _ : state) benchmark::DoNotOptimize(pathwise::failure_prob_path(fm, 0.5).value);
}
BENCHMARK(BM_NestedQuadrature)->DenseRange(2, 3)->Unit(benchmark::kMillisecond);

void BM_MonteCarlo(benchmark::State& state) {
  const MarketModel m = model_of(rates(static_cast<std::size_t>(state.range(0))), 1.0);
  const simulate::PathGenerator gen = simulate::ConstantStateGenerator{};
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate::estimate_failure_prob(m, gen, 1.0, {100000, 1, 1}).mean);
  }
  state.SetItemsProcessed(state.iterations() * 100000);
}
BENCHMARK(BM_MonteCarlo)->Arg(3)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
