#include <benchmark/benchmark.h>

#include <random>

#include "cqa/embeddings.hpp"

namespace {

std::vector<std::vector<std::string>> sentences(int count) {
  std::mt19937_64 rng(2);
  std::vector<std::vector<std::string>> out(count);
  for (auto& s : out)
    for (int i = 0; i < 12; ++i) s.push_back("w" + std::to_string(rng() % 2000));
  return out;
}

void BM_TrainEpoch(benchmark::State& state) {
  const auto corpus = sentences(static_cast<int>(state.range(0)));
  cqa::embed::SgnsConfig cfg;
  cfg.dim = 64;
  cfg.epochs = 1;
  cfg.min_count = 1;
  cfg.threads = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(cqa::embed::train_sgns(corpus, cfg).size());
  state.SetItemsProcessed(state.iterations() * state.range(0) * 12);
}
BENCHMARK(BM_TrainEpoch)->Args({5000, 1})->Args({5000, 4})->Unit(benchmark::kMillisecond);

void BM_PairGradient(benchmark::State& state) {
  std::vector<double> c(100, 0.1), ctx(100, -0.05);
  std::vector<std::vector<double>> negs(5, std::vector<double>(100, 0.02));
  const std::vector<std::span<const double>> spans(negs.begin(), negs.end());
  for (auto _ : state) benchmark::DoNotOptimize(cqa::embed::sgns_pair_gradient(c, ctx, spans).loss);
}
BENCHMARK(BM_PairGradient);

}  // namespace

BENCHMARK_MAIN();
