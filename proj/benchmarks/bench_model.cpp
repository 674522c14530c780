#include <benchmark/benchmark.h>

#include "kraken/app/commands.hpp"
#include "kraken/app/verify.hpp"
#include "kraken/inference/generation.hpp"
#include "kraken/model/forward.hpp"
#include "kraken/parallel/device_group.hpp"
#include "kraken/parallel/kraken_distributed.hpp"

namespace {

using namespace kraken;

ModelConfig bench_config(std::size_t n) {
  ModelConfig c = app::tiny_config();
  c.parallelism = n;
  return c;
}

void BM_ForwardTiny(benchmark::State& state) {
  const ModelConfig c = bench_config(static_cast<std::size_t>(state.range(0)));
  const ModelWeights w = init_weights(c, Rng(0));
  const auto tokens = app::random_tokens(static_cast<std::size_t>(state.range(1)), c.vocab, 0);
  for (auto _ : state) benchmark::DoNotOptimize(model_forward(w, tokens));
}
BENCHMARK(BM_ForwardTiny)->Args({1, 16})->Args({2, 16})->Args({2, 64})->Args({4, 64});

void BM_KrakenDistributed(benchmark::State& state) {
  const ModelConfig c = bench_config(4);
  const ModelWeights w = init_weights(c, Rng(0));
  const auto tokens = app::random_tokens(32, c.vocab, 0);
  const bool concurrent = state.range(0) != 0;
  for (auto _ : state) {
    parallel::DeviceGroup g(4, concurrent);
    benchmark::DoNotOptimize(parallel::run_kraken_distributed(tokens, w, g));
  }
}
BENCHMARK(BM_KrakenDistributed)->Arg(0)->Arg(1);

void BM_DecodeStep(benchmark::State& state) {
  const ModelConfig c = bench_config(2);
  const ModelWeights w = init_weights(c, Rng(0));
  const auto prompt = app::random_tokens(32, c.vocab, 0);
  for (auto _ : state) {
    state.PauseTiming();
    auto r = inference::prefill(w, prompt);
    state.ResumeTiming();
    benchmark::DoNotOptimize(inference::decode_step(w, r.cache, 1));
  }
}
BENCHMARK(BM_DecodeStep);

void BM_TrainingStepGradient(benchmark::State& state) {
  const ModelConfig c = bench_config(2);
  const ModelWeights w = init_weights(c, Rng(0));
  const auto tokens = app::random_tokens(8, c.vocab, 0);
  for (auto _ : state) {
    Tape tape;
    const ModelVars vars = bind_model(tape, w);
    const Var loss = tape.cross_entropy(forward_logits(tape, vars, c, tokens), tokens);
    benchmark::DoNotOptimize(tape.backward(loss, Tensor({1, 1}, 1.0)));
  }
}
BENCHMARK(BM_TrainingStepGradient);

}  // namespace
