#include <benchmark/benchmark.h>

#include <omp.h>

#include <vector>

#include "mabsta/agent.hpp"
#include "mabsta/dp.hpp"
#include "mabsta/env.hpp"
#include "mabsta/rng.hpp"

using namespace mabsta;

namespace {

CumulativeEstimates filled(const TaskGraph& g, int m, std::uint64_t seed) {
  Rng rng(seed);
  CumulativeEstimates est(g.n_tasks(), g.n_edges(), m);
  for (double& v : est.node_values()) v = 50.0 * rng.uniform();
  for (double& v : est.edge_values()) v = 50.0 * rng.uniform();
  return est;
}

// The batch a MABSTA frame issues for its marginals: 1 + N M + |E| M^2 queries.
std::vector<dp::FixQuery> marginal_batch(const TaskGraph& g, int m) {
  std::vector<dp::FixQuery> q{{}};
  for (int i = 0; i < g.n_tasks(); ++i) {
    for (int j = 0; j < m; ++j) q.push_back({i, j, -1, 0});
  }
  for (const Edge& e : g.edges()) {
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k < m; ++k) q.push_back({e.from, j, e.to, k});
    }
  }
  return q;
}

void BM_OmegaTreeChain(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const TaskGraph g = TaskGraph::chain(n);
  const auto est = filled(g, 5, 1);
  const dp::ConditionalFix fix(n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dp::omega_tree(g, 5, est, 0.01, fix).log_total());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_OmegaTreeChain)->Arg(10)->Arg(100)->Arg(1000)->Complexity(benchmark::oN);

// The same pass with the solver and factors prepared once.
void BM_SolveChain(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const TaskGraph g = TaskGraph::chain(n);
  const dp::ChainTreeSolver solver(g, 5);
  const auto factors = dp::scaled_factors(filled(g, 5, 1), 0.01);
  auto ws = solver.make_workspace();
  const std::vector<int> fixed(n, -1);
  std::vector<double> root(5);
  for (auto _ : state) {
    solver.solve(dp::Semiring::kLogSum, factors, fixed, root, ws);
    benchmark::DoNotOptimize(root.data());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_SolveChain)->Arg(10)->Arg(100)->Arg(1000)->Complexity(benchmark::oN);

template <bool Parallel>
void BM_MarginalBatch(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int m = 5;
  const TaskGraph g = TaskGraph::chain(n);
  const dp::ChainTreeSolver solver(g, m);
  const auto factors = dp::scaled_factors(filled(g, m, 2), 0.01);
  const auto queries = marginal_batch(g, m);
  const std::vector<int> base(n, -1);
  std::vector<double> out(queries.size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      dp::log_weight_sums_parallel(solver, factors, base, queries, out);
    } else {
      dp::log_weight_sums_serial(solver, factors, base, queries, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["queries"] = static_cast<double>(queries.size());
  state.counters["threads"] = Parallel ? omp_get_max_threads() : 1;
}
BENCHMARK(BM_MarginalBatch<false>)->Name("BM_MarginalBatchSerial")->Arg(10)->Arg(50)->Arg(200);
BENCHMARK(BM_MarginalBatch<true>)->Name("BM_MarginalBatchParallel")->Arg(10)->Arg(50)->Arg(200);

void BM_MabstaFrame(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int m = 5;
  const TaskGraph g = TaskGraph::chain(n);
  MabstaAgent agent(g, m, {0.05, std::nullopt, GammaMode::kFixed, 3, false});
  UniformEnv env(g, m, 4);
  int t = 0;
  for (auto _ : state) {
    ++t;
    const FrameRewards f = env.next_frame(t);
    const Assignment x = agent.choose(t);
    agent.observe(x, feedback_for(f, g, x), t);
  }
}
BENCHMARK(BM_MabstaFrame)->Arg(5)->Arg(20)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
