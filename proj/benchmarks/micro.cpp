/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <benchmark/benchmark.h>

#include <filesystem>

#include "islands/forecaster.hpp"
#include "islands/grammar.hpp"
#include "islands/metrics.hpp"
#include "islands/nnet/conv1d.hpp"
#include "islands/nnet/gru.hpp"
#include "islands/selector.hpp"

namespace {

using namespace islands;
using nnet::Tensor2D;

const std::filesystem::path kConfigs = std::filesystem::path(ISLANDS_SOURCE_DIR) / "configs";

Tensor2D noise(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  Tensor2D t(rows, cols);
  for (auto& v : t.values()) v = d(rng);
  return t;
}

Tensor2D simplex_rows(int rows, int cols, std::uint64_t seed) {
  auto t = noise(rows, cols, seed);
  for (int r = 0; r < rows; ++r) {
    double s = 0.0;
    for (auto& v : t.row(r)) s += (v = std::exp(v));
    for (auto& v : t.row(r)) v /= s;
  }
  return t;
}

void BM_GruStep(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  nnet::ParamStore store;
  const auto cell = nnet::GruCell::create(store, "g", 15, hidden);
  Rng rng(1);
  store.init_glorot(rng, true);
  const auto x = noise(1, 15, 2);
  Tensor2D h(1, hidden);
  for (auto _ : state) {
    h = nnet::gru_step(store, cell, h, x);
    benchmark::DoNotOptimize(h.data());
  }
}
BENCHMARK(BM_GruStep)->Arg(32)->Arg(64);

void BM_Conv1d(benchmark::State& state) {
  const int frames = static_cast<int>(state.range(0));
  const auto x = noise(frames, 32, 1);
  const auto w = noise(3 * 32, 32, 2);
  const Tensor2D b(1, 32);
  for (auto _ : state) {
    auto y = nnet::conv1d_forward(x, w, b, 3, 4);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * frames);
}
BENCHMARK(BM_Conv1d)->Arg(64)->Arg(512);

void BM_SelectorForward(benchmark::State& state) {
  const auto variant = state.range(0) ? SelectorVariant::tcn : SelectorVariant::mlp;
  const SelectorModel model({.variant = variant}, 16, 3);
  const auto x = simplex_rows(200, 16, 4);
  for (auto _ : state) {
    auto track = model.select(x);
    benchmark::DoNotOptimize(track.selection.data());
  }
  state.SetLabel(to_string(variant));
}
BENCHMARK(BM_SelectorForward)->Arg(0)->Arg(1);

void BM_BayesianPrediction(benchmark::State& state) {
  const auto tax = load_mapping(kConfigs / "salad_taxonomy.tsv");
  const auto corpus = generate_corpus(load_grammar(kConfigs / "salad_grammar.json", tax), 1, 5, tax);
  const Forecaster model(tax.fine_count(), 32, 6);
  const Forecaster* m = &model;
  const auto split = split_observation(corpus[0], 0.2, 0.5);
  const auto ctx = make_context(corpus[0], split, tax.fine_count());
  const auto samples = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto f = predict_future({&m, 1}, ctx, split.horizon, UncertaintyMode::bayesian(samples), 7, tax);
    benchmark::DoNotOptimize(f.fine_mean.data());
  }
}
BENCHMARK(BM_BayesianPrediction)->Arg(4)->Arg(16);

void BM_WeightedAccuracy(benchmark::State& state) {
  const auto tax = load_mapping(kConfigs / "salad_taxonomy.tsv");
  const int n = 1000;
  Rng rng(8);
  std::uniform_int_distribution<int> fine(0, tax.fine_count() - 1), bit(0, 1);
  std::vector<int> sel(n), fa(n), truth(n);
  for (int i = 0; i < n; ++i) sel[i] = bit(rng), fa[i] = fine(rng), truth[i] = fine(rng);
  const auto ca = tax.coarsen(fa);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_accuracy(sel, fa, ca, truth, tax, 1.0));
}
BENCHMARK(BM_WeightedAccuracy);

}  // namespace

BENCHMARK_MAIN();
