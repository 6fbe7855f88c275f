#include <benchmark/benchmark.h>

#include <random>

#include "cqa/mf.hpp"

namespace {

cqa::mf::VoteMatrix votes(int questions, int users) {
  std::mt19937_64 rng(3);
  std::vector<cqa::mf::VoteMatrix::Vote> v;
  for (int q = 0; q < questions; ++q)
    for (int a = 0; a < 4; ++a) v.push_back({q + 1, static_cast<cqa::UserId>(rng() % users) + 1, static_cast<long long>(rng() % 30)});
  for (int u = 0; u < users; ++u) v.push_back({u % questions + 1, u + 1, 1});
  return cqa::mf::VoteMatrix::from_votes(v);
}

void BM_Factorize(benchmark::State& state) {
  const auto v = votes(static_cast<int>(state.range(0)), static_cast<int>(state.range(0) / 4));
  cqa::mf::NmfConfig cfg;
  cfg.rank = static_cast<int>(state.range(1));
  cfg.max_iter = 20;
  cfg.tol = 0;
  for (auto _ : state) benchmark::DoNotOptimize(cqa::mf::factorize(v, cfg).loss_trace.back());
}
BENCHMARK(BM_Factorize)->Args({400, 8})->Args({1600, 16})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
