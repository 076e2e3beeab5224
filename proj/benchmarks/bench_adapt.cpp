// Copyright 2026 The poemtta Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>

#include <benchmark/benchmark.h>

#include "poemtta/nn/arch.hpp"
#include "poemtta/nn/loss.hpp"
#include "poemtta/nn/passes.hpp"
#include "poemtta/tta/engine.hpp"

namespace {

namespace nn = poem::nn;
namespace tta = poem::tta;

constexpr std::size_t kDim = 32;
constexpr std::size_t kClasses = 10;

nn::Network make_net() {
  return nn::build_network(nn::ArchSpec::parse(nn::kDefaultArch), kDim, kClasses, 1);
}

nn::Matrix make_batch(std::size_t rows) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 1.0);
  nn::Matrix x(rows, kDim);
  for (double& v : x.data()) v = normal(rng);
  return x;
}

void BM_Forward(benchmark::State& state) {
  const nn::Network net = make_net();
  const nn::Matrix x = make_batch(static_cast<std::size_t>(state.range(0)));
  const nn::StatsMode mode = nn::stats_mode_for(x.rows());
  for (auto _ : state) benchmark::DoNotOptimize(nn::forward(net.layers, x, mode));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(64)->Arg(256);

void BM_ForwardBackward(benchmark::State& state) {
  nn::Network net = make_net();
  nn::set_trainable_norm_affine_only(net.layers, true);
  const nn::Matrix x = make_batch(static_cast<std::size_t>(state.range(0)));
  std::vector<std::size_t> rows(x.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  for (auto _ : state) {
    auto fwd = nn::forward(net.layers, x, nn::StatsMode::kBatch);
    const nn::Matrix probs = nn::softmax(fwd.output);
    const nn::Matrix dz = nn::softmax_backward(probs, nn::mean_entropy_grad(probs, rows));
    nn::zero_grads(net.layers);
    benchmark::DoNotOptimize(nn::backward(net.layers, fwd.trace, dz, nn::accept_trainable(), false));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(256);

void BM_Adapt(benchmark::State& state, tta::Method method) {
  const nn::Network net = make_net();
  tta::AdaptConfig cfg;
  cfg.method = method;
  // A factor above one selects every sample, so poem always updates.
  cfg.entropy_factor = 1.01;
  const nn::Matrix x = make_batch(64);
  tta::Adapter adapter(net, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(adapter.adapt(x));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK_CAPTURE(BM_Adapt, no_adapt, tta::Method::kNoAdapt);
BENCHMARK_CAPTURE(BM_Adapt, tent, tta::Method::kTent);
BENCHMARK_CAPTURE(BM_Adapt, threshold_tent, tta::Method::kThresholdTent);
BENCHMARK_CAPTURE(BM_Adapt, poem, tta::Method::kPoem);

}  // namespace

BENCHMARK_MAIN();
