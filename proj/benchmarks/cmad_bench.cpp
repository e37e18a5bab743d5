// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <benchmark/benchmark.h>

#include "cmad/evaluation/synthetic.hpp"
#include "cmad/model/adapted_model.hpp"
#include "cmad/model/generation.hpp"
#include "cmad/numerics/ops.hpp"
#include "cmad/training/trainer.hpp"

namespace {

using namespace cmad;

Tensor<float> random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<float> dist;
  Tensor<float> t({rows, cols});
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto a = random_matrix(n, n, rng);
  const auto b = random_matrix(n, n, rng);
  for (auto _ : state) {
    Tape<float> tape;
    auto c = ops::matmul(tape.constant(a), tape.constant(b));
    benchmark::DoNotOptimize(c.value().values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

// One optimizer step on a full-length example at the toy configuration.
void BM_TrainingStep(benchmark::State& state) {
  ModelConfig config;
  auto model = AdaptedModel<float>::build(config, 3);
  SyntheticSpec spec;
  std::mt19937_64 rng(5);
  const auto example = synthesize_example(spec, rng, "bench");
  const auto batch = std::vector<TrainingExample>{
      make_training_example(example, spec.length, config.mask_rate, MaskGranularity::sequence, rng)};
  Adam<float> adam;
  StepOptions opts;
  opts.lr = 1e-4;
  for (auto _ : state) benchmark::DoNotOptimize(training_step(model, batch, adam, opts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(spec.length));
}
BENCHMARK(BM_TrainingStep)->Unit(benchmark::kMillisecond);

// Cached token-by-token decoding over a full condition window.
void BM_GenerationStep(benchmark::State& state) {
  ModelConfig config;
  const auto model = AdaptedModel<float>::build(config, 3);
  SyntheticSpec spec;
  std::mt19937_64 rng(5);
  const auto example = synthesize_example(spec, rng, "bench");
  for (auto _ : state) {
    IncrementalDecoder<float> decoder(model, example.condition, 0);
    int token = kStartToken;
    for (std::size_t t = 0; t < spec.length; ++t) {
      const auto logits = decoder.step(token);
      token = example.targets[t];
      benchmark::DoNotOptimize(logits.data());
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(spec.length));
}
BENCHMARK(BM_GenerationStep)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
