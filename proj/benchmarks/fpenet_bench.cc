/* Copyright 2026 The FPENet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <benchmark/benchmark.h>

#include "fpenet/eager.h"
#include "fpenet/fpe.h"
#include "fpenet/graph.h"
#include "fpenet/meu.h"
#include "fpenet/ops.h"
#include "fpenet/random.h"
#include "fpenet/tape.h"

namespace fpenet {
namespace {

Tensor<float> random_tensor(Shape s, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<float> t(s);
  for (auto& v : t.data()) v = static_cast<float>(uniform(rng, -1.0, 1.0));
  return t;
}

// Args: channels, spatial extent.
void BM_Conv3x3(benchmark::State& state) {
  const int c = state.range(0), hw = state.range(1);
  ConvSpec spec{c, c, 3, 3, 1, 1, 1, 1, false};
  const auto x = random_tensor(Shape{1, c, hw, hw}, 1);
  const auto w = random_tensor(spec.weight_shape(), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ops::conv2d<float>(x, w, nullptr, spec));
  }
  state.counters["macs/s"] = benchmark::Counter(
      static_cast<double>(hw) * hw * c * c * 9, benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Conv3x3)->Args({16, 64})->Args({32, 32})->Args({64, 16});

void BM_Depthwise(benchmark::State& state) {
  const int c = state.range(0), hw = state.range(1);
  const auto spec = ConvSpec::depthwise3x3(c, 4, 1);
  const auto x = random_tensor(Shape{1, c, hw, hw}, 1);
  const auto w = random_tensor(spec.weight_shape(), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ops::conv2d<float>(x, w, nullptr, spec));
  }
}
BENCHMARK(BM_Depthwise)->Args({64, 128})->Args({256, 64});

void BM_Pointwise(benchmark::State& state) {
  const int c = state.range(0), hw = state.range(1);
  const auto spec = ConvSpec::pointwise(c, 4 * c, false);
  const auto x = random_tensor(Shape{1, c, hw, hw}, 1);
  const auto w = random_tensor(spec.weight_shape(), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ops::conv2d<float>(x, w, nullptr, spec));
  }
}
BENCHMARK(BM_Pointwise)->Args({32, 128})->Args({64, 64});

void BM_FpeBlock(benchmark::State& state) {
  FpeConfig cfg;
  cfg.in_channels = cfg.out_channels = state.range(0);
  const int hw = state.range(1);
  Rng rng(3);
  const FpeWeights<float> w(cfg, rng);
  const auto x = random_tensor(Shape{1, cfg.in_channels, hw, hw}, 4);
  Eager<float> ctx;
  for (auto _ : state) benchmark::DoNotOptimize(fpe_forward(ctx, x, w, cfg));
}
BENCHMARK(BM_FpeBlock)->Args({32, 128})->Args({64, 64});

void BM_FpeBlockBackward(benchmark::State& state) {
  FpeConfig cfg;
  cfg.in_channels = cfg.out_channels = 32;
  Rng rng(3);
  const FpeWeights<float> w(cfg, rng);
  const auto x = random_tensor(Shape{8, 32, 32, 32}, 4);
  for (auto _ : state) {
    Tape<float> tape;
    const Var y = fpe_forward(tape, tape.input(x), w, cfg);
    benchmark::DoNotOptimize(tape.backward(tape.sum(y)));
  }
}
BENCHMARK(BM_FpeBlockBackward)->Unit(benchmark::kMillisecond);

void BM_Meu(benchmark::State& state) {
  MeuConfig cfg;
  Rng rng(5);
  const MeuWeights<float> w(cfg, rng);
  const auto high = random_tensor(Shape{1, 64, 64, 32}, 6);
  const auto low = random_tensor(Shape{1, 32, 128, 64}, 7);
  Eager<float> ctx;
  for (auto _ : state) {
    benchmark::DoNotOptimize(meu_forward(ctx, high, low, w, cfg));
  }
}
BENCHMARK(BM_Meu);

// Args: input height, width.
void BM_Forward(benchmark::State& state) {
  ModelConfig cfg;
  cfg.input_h = state.range(0);
  cfg.input_w = state.range(1);
  const LayerGraph g = build(cfg, 0);
  const auto x = random_tensor(Shape{1, 3, cfg.input_h, cfg.input_w}, 8);
  for (auto _ : state) benchmark::DoNotOptimize(forward(g, x));
}
BENCHMARK(BM_Forward)
    ->Args({256, 128})
    ->Args({512, 256})
    ->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace fpenet

BENCHMARK_MAIN();
