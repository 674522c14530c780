#include <random>

#include <benchmark/benchmark.h>

#include "kraken/numerics/ops.hpp"

namespace {

kraken::Tensor random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist;
  kraken::Tensor t({r, c});
  for (double& v : t.data()) v = dist(gen);
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kraken::ops::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * 2 * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 256);

void BM_LayerNorm(benchmark::State& state) {
  const auto x = random_matrix(64, static_cast<std::size_t>(state.range(0)), 3);
  const kraken::Tensor g({x.cols()}, 1.0), b({x.cols()}, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(kraken::ops::layer_norm(x, g, b));
}
BENCHMARK(BM_LayerNorm)->Arg(64)->Arg(512);

void BM_CausalSoftmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_matrix(n, n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(kraken::ops::causal_softmax_rows(x, 0));
}
BENCHMARK(BM_CausalSoftmax)->Arg(64)->Arg(256);

}  // namespace
