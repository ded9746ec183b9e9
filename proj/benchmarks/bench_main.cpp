#include <benchmark/benchmark.h>

#include <vector>

#include "cfm/measurement.hpp"
#include "cfm/operator.hpp"
#include "cfm/patterns.hpp"
#include "cfm/phantoms.hpp"
#include "cfm/recovery.hpp"
#include "cfm/rng.hpp"
#include "cfm/transforms.hpp"

namespace {

std::vector<double> random_vector(std::size_t n) {
  cfm::CounterRng rng(n);
  std::vector<double> v(n);
  for (double& a : v) a = rng.uniform(-1.0, 1.0);
  return v;
}

void BM_Fwht(benchmark::State& state) {
  auto v = random_vector(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    cfm::fwht_inplace(v);
    benchmark::DoNotOptimize(v.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Fwht)->RangeMultiplier(2)->Range(1 << 10, 1 << 20)->Complexity(benchmark::oNLogN);

void BM_Haar(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const cfm::Scene img(side, side, random_vector(side * side));
  for (auto _ : state) benchmark::DoNotOptimize(cfm::haar_forward(img, 3));
}
BENCHMARK(BM_Haar)->Arg(64)->Arg(128)->Arg(256);

// Forward plus adjoint, as in one solver iteration.
void BM_Operator(benchmark::State& state, cfm::Ensemble ensemble) {
  const std::size_t n = 128 * 128;
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto p = cfm::generate_patterns(ensemble, m, n, 1, true);
  const cfm::SensingOperator op(p);
  const auto x = random_vector(n);
  std::vector<double> y(m);
  std::vector<double> z(n);
  for (auto _ : state) {
    op.apply(x, y);
    op.adjoint(y, z);
    benchmark::DoNotOptimize(z.data());
  }
}
BENCHMARK_CAPTURE(BM_Operator, bernoulli, cfm::Ensemble::bernoulli())->Arg(256)->Arg(1024);
BENCHMARK_CAPTURE(BM_Operator, hadamard, cfm::Ensemble::hadamard(true))->Arg(256)->Arg(1024);

void BM_SolverIterations(benchmark::State& state) {
  const auto truth = cfm::generate_scene(cfm::PhantomSpec::spikes(64, 3), 128, 128);
  const auto p = cfm::generate_patterns(cfm::Ensemble::bernoulli(), 1024, 128 * 128, 4, true);
  const auto rec = cfm::measure(truth, p, cfm::NoiseModel::none());
  cfm::SolverConfig cfg;
  cfg.max_iters = static_cast<std::size_t>(state.range(0));
  cfg.continuation = false;
  for (auto _ : state) benchmark::DoNotOptimize(cfm::reconstruct_l1(rec, p, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SolverIterations)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
