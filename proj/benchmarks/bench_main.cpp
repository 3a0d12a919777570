#include <benchmark/benchmark.h>

#include "fedgraph/federated.hpp"
#include "fedgraph/partition.hpp"
#include "fedgraph/synthgen.hpp"

using namespace fedgraph;

namespace {

Graph bench_graph(std::int32_t n) {
  GeneratorConfig cfg;
  cfg.num_nodes = n;
  cfg.seed = 11;
  return generate_graph(cfg);
}

ClientState bench_client(std::int32_t n, const Hyperparams& hp) {
  auto g = bench_graph(n);
  auto split = five_group_split(n, 3);
  auto params = init_params(hp, g.features().cols(), g.num_classes(), 5);
  return make_client(0, std::move(g), std::move(split), std::move(params), hp, 7);
}

void BM_PairwiseMetric(benchmark::State& state) {
  Hyperparams hp;
  auto c = bench_client(static_cast<std::int32_t>(state.range(0)), hp);
  BoundParams bp(c.params, nullptr);
  const auto z = structure_learner_embed(bp, c.context).value();
  const auto& heads = c.params.block("sl_heads").value;
  for (auto _ : state) benchmark::DoNotOptimize(pairwise_metric_matrix(heads, z, hp.metric));
}
BENCHMARK(BM_PairwiseMetric)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_TopKSelect(benchmark::State& state) {
  Hyperparams hp;
  auto c = bench_client(static_cast<std::int32_t>(state.range(0)), hp);
  BoundParams bp(c.params, nullptr);
  const auto z = structure_learner_embed(bp, c.context).value();
  const auto phi = pairwise_metric_matrix(c.params.block("sl_heads").value, z, hp.metric);
  for (auto _ : state) benchmark::DoNotOptimize(select_latent_edges(phi, hp, 0));
}
BENCHMARK(BM_TopKSelect)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_SparseDenseMatmul(benchmark::State& state) {
  const auto g = bench_graph(static_cast<std::int32_t>(state.range(0)));
  const auto ctx = GraphContext::make(g);
  const auto z = ad::Tensor::constant(Matrix::Random(g.num_nodes(), 32));
  const auto w = ad::Tensor::constant(ctx.adjacency_weights);
  for (auto _ : state) benchmark::DoNotOptimize(ad::sparse_dense_matmul(ctx.adjacency, w, z).value());
}
BENCHMARK(BM_SparseDenseMatmul)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_TrainStep(benchmark::State& state) {
  Hyperparams hp;
  if (state.range(1) == 1) hp.architecture = Architecture::SingleChannel;
  auto c = bench_client(static_cast<std::int32_t>(state.range(0)), hp);
  for (auto _ : state) benchmark::DoNotOptimize(train_step(c, hp));
}
BENCHMARK(BM_TrainStep)->Args({1000, 0})->Args({1000, 1})->Unit(benchmark::kMillisecond);

void BM_Louvain(benchmark::State& state) {
  const auto g = bench_graph(static_cast<std::int32_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(louvain(g, 1));
}
BENCHMARK(BM_Louvain)->Arg(3000)->Unit(benchmark::kMillisecond);

void BM_Aggregate(benchmark::State& state) {
  Hyperparams hp;
  std::vector<ClientState> clients;
  for (int i = 0; i < 4; ++i) clients.push_back(bench_client(200, hp));
  for (auto _ : state) benchmark::DoNotOptimize(aggregate(clients, AggregationScope::All));
}
BENCHMARK(BM_Aggregate);

}  // namespace
BENCHMARK_MAIN();
