// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "magic/gat.hpp"
#include "magic/metrics.hpp"
#include "magic/model.hpp"
#include "magic/training.hpp"

namespace magic {
namespace {

Tensor random_tensor(Rng& rng, std::size_t r, std::size_t c) {
  Tensor t(r, c);
  for (double& v : t.data()) v = rng.uniform(-1, 1);
  return t;
}

// Star-shaped interaction graph: post, image, then comments.
InteractionGraph star_graph(Rng& rng, std::size_t comments, std::size_t dim, std::size_t label) {
  InteractionGraph g;
  g.id = "g";
  g.label = label;
  g.kinds = {NodeKind::kPost, NodeKind::kImage};
  g.kinds.resize(2 + comments, NodeKind::kComment);
  g.features = random_tensor(rng, g.kinds.size(), dim);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t k = 1; k < g.kinds.size(); ++k) edges.emplace_back(0, k);
  g.adjacency = Topology::from_edges(g.kinds.size(), edges);
  return g;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = random_tensor(rng, n, n), b = random_tensor(rng, n, n);
  for (auto _ : state) benchmark::DoNotOptimize(matmul_plain(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void gat_layer(benchmark::State& state, AttentionPath path) {
  const auto comments = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const InteractionGraph g = star_graph(rng, comments, 64, 0);
  const GatLayerParams p = GatLayerParams::glorot(64, 16, 4, Aggregation::kConcat, rng);
  for (auto _ : state) {
    Tape tape;
    LayerContext ctx;
    ctx.path = path;
    benchmark::DoNotOptimize(
        gat_layer_forward(p, bind_layer(tape, p, false), tape.constant(g.features), g.adjacency, ctx).value());
  }
  state.counters["nodes"] = static_cast<double>(g.num_nodes());
}
void BM_GatLayerDense(benchmark::State& state) { gat_layer(state, AttentionPath::kDense); }
void BM_GatLayerSparse(benchmark::State& state) { gat_layer(state, AttentionPath::kSparse); }
BENCHMARK(BM_GatLayerDense)->Arg(8)->Arg(32)->Arg(62)->Arg(254);
BENCHMARK(BM_GatLayerSparse)->Arg(8)->Arg(32)->Arg(62)->Arg(254)->Arg(1022);

void BM_TrainStep(benchmark::State& state) {
  Rng rng(3);
  std::vector<InteractionGraph> graphs;
  for (std::size_t i = 0; i < 128; ++i) graphs.push_back(star_graph(rng, rng.below(12), 64, i % 2));
  ModelConfig mc;
  mc.hidden_dim = 64;
  mc.heads = 4;
  const MagicModel model = MagicModel::init(mc, 64, 2, static_cast<std::size_t>(state.range(0)));
  TrainConfig tc;
  tc.epochs = 1;
  tc.patience = 0;
  for (auto _ : state) benchmark::DoNotOptimize(train(model, graphs, std::span(graphs).first(8), tc));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 128);
}
BENCHMARK(BM_TrainStep)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Metrics(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  std::vector<std::size_t> actual(n), predicted(n);
  for (std::size_t i = 0; i < n; ++i) {
    actual[i] = rng.below(3);
    predicted[i] = rng.uniform() < 0.8 ? actual[i] : rng.below(3);
  }
  for (auto _ : state) benchmark::DoNotOptimize(metrics(confusion(actual, predicted, 3)));
}
BENCHMARK(BM_Metrics)->Arg(1000)->Arg(100000);

}  // namespace
}  // namespace magic

BENCHMARK_MAIN();
