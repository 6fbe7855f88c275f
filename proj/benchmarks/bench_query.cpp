#include <benchmark/benchmark.h>

#include "cqa/recommend.hpp"
#include "cqa/synth.hpp"

namespace {

// Routed query latency as the number of domains grows at fixed domain size.
void BM_RoutedQuery(benchmark::State& state) {
  const auto f = cqa::synth::scaling_fixture(static_cast<int>(state.range(0)), 50, 64, 1);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& q = f.queries[i++ % f.queries.size()];
    benchmark::DoNotOptimize(cqa::recommend::recommend_for_vector(q, f.index, 10).experts.size());
  }
}
BENCHMARK(BM_RoutedQuery)->Arg(50)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
