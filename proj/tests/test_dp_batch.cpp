#include <doctest.h>

#include <cmath>
#include <cstring>

#include <omp.h>

#include "instances.hpp"
#include "mabsta/dp.hpp"
#include "mabsta/error.hpp"

using namespace mabsta;
using namespace mabsta::testing;

namespace {

std::vector<dp::FixQuery> all_pair_queries(const TaskGraph& g, int m) {
  std::vector<dp::FixQuery> q;
  q.push_back({});
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

}  // namespace

TEST_CASE("parallel batch is bit-identical to the serial loop") {
  omp_set_num_threads(4);
  Rng rng(3);
  const StructureKind kinds[] = {StructureKind::kTree, StructureKind::kSerialTrees,
                                 StructureKind::kParallelChainsOfTrees};
  for (int rep = 0; rep < 12; ++rep) {
    const TaskGraph g = random_of_kind(rng, kinds[rep % 3], 3, 6);
    const int m = 3;
    const auto est = random_estimates(g, m, rng, 40.0);
    const auto factors = dp::scaled_factors(est, 0.1);
    const dp::ChainTreeSolver solver(g, m);
    const auto queries = all_pair_queries(g, m);
    std::vector<int> base(g.n_tasks(), -1);
    if (rep % 2) base[rng.below(g.n_tasks())] = 1;
    std::vector<double> a(queries.size()), b(queries.size()), c(queries.size());
    dp::log_weight_sums_serial(solver, factors, base, queries, a);
    dp::log_weight_sums_parallel(solver, factors, base, queries, b);
    dp::log_weight_sums(solver, factors, base, queries, c);
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(std::memcmp(&a[k], &b[k], sizeof(double)) == 0);
      CHECK(std::memcmp(&a[k], &c[k], sizeof(double)) == 0);
    }
    // Each entry against the enumeration oracle.
    for (std::size_t k = 0; k < queries.size(); k += 5) {
      dp::ConditionalFix fix(g.n_tasks());
      bool ok = true;
      for (int i = 0; i < g.n_tasks(); ++i) {
        if (base[i] >= 0) fix.fix(i, base[i]);
      }
      auto add = [&](TaskId t, int d) {
        if (t < 0) return;
        if (fix.device_of(t) >= 0 && fix.device_of(t) != d) ok = false;
        else fix.fix(t, d);
      };
      add(queries[k].task_a, queries[k].device_a);
      if (ok) add(queries[k].task_b, queries[k].device_b);
      if (!ok) {
        CHECK(a[k] == -INFINITY);
        continue;
      }
      const double oracle = dp::enumerate_weight_sum(g, m, est, 0.1, fix);
      CHECK(std::abs(a[k] - oracle) <= 1e-9 * std::max(1.0, std::abs(oracle)));
    }
  }
}

TEST_CASE("contradictory queries give -inf") {
  const TaskGraph g = TaskGraph::chain(3);
  const dp::ChainTreeSolver solver(g, 2);
  const auto factors = dp::scaled_factors(CumulativeEstimates(3, 2, 2), 1.0);
  const std::vector<dp::FixQuery> q = {{0, 0, 0, 1}, {1, 1, -1, 0}};
  const std::vector<int> base = {-1, 0, -1};
  std::vector<double> out(2);
  dp::log_weight_sums_serial(solver, factors, base, q, out);
  CHECK(out[0] == -INFINITY);
  CHECK(out[1] == -INFINITY);
}

TEST_CASE("batch buffers are checked") {
  const TaskGraph g = TaskGraph::chain(3);
  const dp::ChainTreeSolver solver(g, 2);
  const auto factors = dp::scaled_factors(CumulativeEstimates(3, 2, 2), 1.0);
  const std::vector<dp::FixQuery> q(3);
  std::vector<double> out(2);
  const std::vector<int> base(3, -1);
  CHECK_THROWS_AS(dp::log_weight_sums_serial(solver, factors, base, q, out), Error);
}

TEST_CASE("general DAGs are rejected by the solver") {
  const TaskGraph g =
      TaskGraph::from_one_based(5, {{1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 5}, {4, 5}}, 5);
  CHECK_THROWS_AS(dp::ChainTreeSolver(g, 2), Error);
}
