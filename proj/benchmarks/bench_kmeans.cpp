#include <benchmark/benchmark.h>

#include <random>

#include "cqa/domains.hpp"

namespace {

cqa::Matrix points(std::size_t n, std::size_t dim) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  cqa::Matrix m(n, dim);
  for (auto& x : m.data()) x = g(rng);
  return cqa::domains::normalize_rows(m);
}

void BM_KMeans(benchmark::State& state) {
  const auto m = points(static_cast<std::size_t>(state.range(0)), 64);
  cqa::domains::KMeansConfig cfg;
  cfg.k = static_cast<int>(state.range(1));
  cfg.restarts = 1;
  for (auto _ : state) benchmark::DoNotOptimize(cqa::domains::kmeans(m, cfg).objective);
}
BENCHMARK(BM_KMeans)->Args({2000, 16})->Args({2000, 64})->Args({8000, 64})->Unit(benchmark::kMillisecond);

void BM_Silhouette(benchmark::State& state) {
  const auto m = points(static_cast<std::size_t>(state.range(0)), 64);
  std::vector<int> label(m.rows());
  for (std::size_t i = 0; i < label.size(); ++i) label[i] = static_cast<int>(i % 8);
  for (auto _ : state) benchmark::DoNotOptimize(cqa::domains::silhouette(m, label));
}
BENCHMARK(BM_Silhouette)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
