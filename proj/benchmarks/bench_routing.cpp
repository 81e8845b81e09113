#include <benchmark/benchmark.h>

#include "dessim/analysis.hpp"
#include "dessim/des.hpp"
#include "dessim/gating.hpp"
#include "dessim/oracle.hpp"

using namespace dessim;

namespace {

PoolConfig pool(int m, int k) {
  PoolConfig cfg;
  cfg.experts_total = m;
  cfg.top_k = k;
  cfg.bytes_per_expert = 1;
  cfg.hidden_dim = 1;
  return cfg;
}

RouterBlock block_for(int n, int m) {
  Rng rng(7);
  std::vector<double> logits(static_cast<std::size_t>(n) * m);
  for (double& v : logits) v = rng.next_normal();
  return make_router_block(n, m, std::move(logits));
}

}  // namespace

static void BM_TopKRoute(benchmark::State& state) {
  int m = static_cast<int>(state.range(0));
  PoolConfig cfg = pool(m, 8);
  RouterBlock block = block_for(32, m);
  GateMatrix gates = activate(block, cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(topk_route(gates, 8));
  }
}
BENCHMARK(BM_TopKRoute)->Arg(64)->Arg(256)->Arg(512);

static void BM_DesVoteComposed(benchmark::State& state) {
  int m = static_cast<int>(state.range(0));
  PoolConfig cfg = pool(m, 8);
  RouterBlock block = block_for(32, m);
  for (auto _ : state) {
    benchmark::DoNotOptimize(des_vote_coreset(block, cfg, 0.15));
  }
}
BENCHMARK(BM_DesVoteComposed)->Arg(64)->Arg(256)->Arg(512);

static void BM_DesVoteFused(benchmark::State& state) {
  int m = static_cast<int>(state.range(0));
  PoolConfig cfg = pool(m, 8);
  RouterBlock block = block_for(32, m);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fused_vote_pipeline(block, cfg, 0.15));
  }
}
BENCHMARK(BM_DesVoteFused)->Arg(64)->Arg(256)->Arg(512);

static void BM_DesSeq(benchmark::State& state) {
  int m = static_cast<int>(state.range(0));
  PoolConfig cfg = pool(m, 8);
  RouterBlock block = block_for(32, m);
  for (auto _ : state) {
    benchmark::DoNotOptimize(des_seq_coreset(block, cfg, 3));
  }
}
BENCHMARK(BM_DesSeq)->Arg(64)->Arg(256)->Arg(512);

static void BM_ConstrainedRoute(benchmark::State& state) {
  int m = static_cast<int>(state.range(0));
  PoolConfig cfg = pool(m, 8);
  RouterBlock block = block_for(32, m);
  Coreset coreset = des_vote_coreset(block, cfg, 0.15).coreset;
  for (auto _ : state) {
    benchmark::DoNotOptimize(constrained_route(block, cfg, coreset));
  }
}
BENCHMARK(BM_ConstrainedRoute)->Arg(64)->Arg(256)->Arg(512);

static void BM_McUniqueExperts(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mc_unique_experts(256, 8, 32, static_cast<int>(state.range(0)), 1));
  }
}
BENCHMARK(BM_McUniqueExperts)->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
