// Feature-matrix kernels: OpenMP rows with the local-support kernel against
// the single-threaded dense reference.

#include "msomdr/feature_map.hpp"
#include "msomdr/simulate.hpp"
#include "msomdr/tensor_basis.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <utility>

namespace {

using namespace msomdr;

const Dataset& scenario(std::size_t n, std::size_t m) {
  static std::map<std::pair<std::size_t, std::size_t>, Dataset> cache;
  auto it = cache.find({n, m});
  if (it == cache.end()) {
    ScenarioConfig cfg;
    cfg.n = n;
    cfg.m = m;
    cfg.seed = 1;
    it = cache.emplace(std::make_pair(n, m), gen_scenario_a1(cfg).data).first;
  }
  return it->second;
}

void run(benchmark::State& state, bool parallel) {
  const Dataset& data = scenario(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  const auto nb = static_cast<std::size_t>(state.range(2));
  const FeatureSpec spec = make_tensor_basis(data, std::vector<std::size_t>{nb, nb});
  for (auto _ : state) {
    Eigen::MatrixXd W = parallel ? feature_matrix(spec, data) : feature_matrix_serial(spec, data);
    benchmark::DoNotOptimize(W.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

void BM_FeatureMatrixParallel(benchmark::State& state) { run(state, true); }
void BM_FeatureMatrixSerial(benchmark::State& state) { run(state, false); }

void sizes(benchmark::internal::Benchmark* b) {
  b->Args({500, 200, 6})->Args({2000, 200, 6})->Args({500, 1000, 8})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_FeatureMatrixParallel)->Apply(sizes);
BENCHMARK(BM_FeatureMatrixSerial)->Apply(sizes);

BENCHMARK_MAIN();
