#include <doctest.h>

#include <cmath>
#include <omp.h>

#include "instances.hpp"
#include "mabsta/baselines.hpp"
#include "mabsta/error.hpp"

using namespace mabsta;
using namespace mabsta::testing;

namespace {

std::vector<FrameRewards> random_frames(const TaskGraph& g, int m, int n, std::uint64_t seed) {
  UniformEnv env(g, m, seed);
  return materialize(env, n);
}

}  // namespace

TEST_CASE("Exp3 starts uniform") {
  const TaskGraph g = TaskGraph::chain(3);
  Exp3Flat exp3(g, 3, {1000, std::nullopt, 1});
  CHECK(exp3.n_arms() == 27);
  for (std::size_t a = 0; a < 27; ++a) CHECK(exp3.arm_probability(a) == doctest::Approx(1.0 / 27));
  const double k = 27.0;
  CHECK(exp3.gamma() == doctest::Approx(std::sqrt(k * std::log(k) / ((std::exp(1.0) - 1.0) * 1000))));
  CHECK(exp3.eta() == doctest::Approx(exp3.gamma() / k));
}

TEST_CASE("Exp3 locks onto the paying arm") {
  const TaskGraph g(1, {}, 0);
  Exp3Flat exp3(g, 2, {5000, std::nullopt, 3});
  int late_hits = 0;
  for (int t = 1; t <= 5000; ++t) {
    const Assignment x = exp3.choose(t);
    exp3.observe(x, BanditFeedback{{x[0] == 0 ? 1.0 : 0.0}, {}}, t);
    if (t > 4000 && x[0] == 0) ++late_hits;
  }
  CHECK(late_hits / 1000.0 > 0.9);
}

TEST_CASE("Exp3 weights stay normalized across rebuilds") {
  const TaskGraph g = TaskGraph::chain(3);
  Exp3Flat exp3(g, 3, {20000, std::nullopt, 5});
  UniformEnv env(g, 3, 8);
  for (int t = 1; t <= 9000; ++t) {
    const FrameRewards f = env.next_frame(t);
    const Assignment x = exp3.choose(t);
    exp3.observe(x, feedback_for(f, g, x), t);
  }
  double total = 0.0;
  for (std::size_t a = 0; a < exp3.n_arms(); ++a) total += exp3.arm_probability(a);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(Exp3Flat(TaskGraph::chain(21), 2, {10, std::nullopt, 0}), Error);
}

TEST_CASE("uniform random frequencies") {
  const TaskGraph g = TaskGraph::chain(3);
  UniformRandom rnd(g, 4, 2);
  std::vector<std::vector<int>> counts(3, std::vector<int>(4, 0));
  const int n = 100000;
  for (int t = 1; t <= n; ++t) {
    const Assignment x = rnd.choose(t);
    for (int i = 0; i < 3; ++i) ++counts[i][x[i]];
  }
  for (const auto& row : counts) {
    for (int c : row) CHECK(std::abs(c / static_cast<double>(n) - 0.25) < 0.01);
  }
  // Feedback does not matter.
  UniformRandom a(g, 4, 9), b(g, 4, 9);
  for (int t = 1; t <= 50; ++t) {
    const Assignment x = a.choose(t);
    a.observe(x, BanditFeedback{{1, 1, 1}, {1, 1}}, t);
    CHECK(b.choose(t) == x);
  }
}

TEST_CASE("myopic picks the highest belief") {
  const TaskGraph g = TaskGraph::chain(3);
  MyopicMarkov myopic(g, default_markov_params().transitions);
  myopic.set_beliefs({0.9, 0.2});
  CHECK(myopic.choose(1) == Assignment{0, 0, 0});
  myopic.set_beliefs({0.2, 0.9});
  CHECK(myopic.choose(1) == Assignment{1, 1, 1});
  myopic.set_beliefs({0.5, 0.5});
  CHECK(myopic.choose(1) == Assignment{0, 0, 0});

  // A bad observation on device 0 followed by one prediction step.
  const auto p = default_markov_params().transitions;
  myopic.set_beliefs({0.9, 0.3});
  myopic.observe({0, 0, 0}, BanditFeedback{{0.1, 0.1, 0.1}, {0, 0}}, 1);
  CHECK(myopic.beliefs()[0] == doctest::Approx(p[0][1][0]));
  CHECK(myopic.beliefs()[1] == doctest::Approx(0.3 * p[1][0][0] + 0.7 * p[1][1][0]));
}

TEST_CASE("offline optimum: dominance and the two-frame example") {
  const TaskGraph g = TaskGraph::chain(3);
  std::vector<FrameRewards> frames(4, FrameRewards(3, 2, 3, 0.2));
  for (auto& f : frames) {
    for (int i = 0; i < 3; ++i) f.node(i, 0) = 0.9;
    for (std::size_t e = 0; e < 2; ++e) f.edge(e, 0, 0) = 0.9;
  }
  CHECK(offline_optimal(frames, g, 3).x == Assignment{0, 0, 0});

  const TaskGraph one(1, {}, 0);
  std::vector<FrameRewards> two(2, FrameRewards(1, 0, 2));
  // Device 0 earns 0.9 then 0.2, device 1 earns 0.4 then 0.6.
  two[0].node(0, 0) = 0.9;
  two[1].node(0, 0) = 0.2;
  two[0].node(0, 1) = 0.4;
  two[1].node(0, 1) = 0.6;
  const OptimalAssignment opt = offline_optimal(two, one, 2);
  CHECK(opt.x == Assignment{0});
  CHECK(opt.total == doctest::Approx(1.1).epsilon(1e-15));
  const OptimalAssignment bf = best_fixed_brute_force(one, 2, time_summed(two));
  CHECK(bf.x == Assignment{0});
}

TEST_CASE("max-plus DP equals brute force on random instances") {
  omp_set_num_threads(4);
  Rng rng(17);
  const StructureKind kinds[] = {StructureKind::kTree, StructureKind::kSerialTrees,
                                 StructureKind::kParallelChainsOfTrees};
  for (int rep = 0; rep < 30; ++rep) {
    const TaskGraph g = random_of_kind(rng, kinds[rep % 3], 2, 6);
    const int m = 2 + static_cast<int>(rng.below(3));
    const auto frames = random_frames(g, m, 5, 100 + rep);
    const NodeEdgeTable summed = time_summed(frames);
    const OptimalAssignment dp = best_fixed_max_plus(g, m, summed);
    const OptimalAssignment bf = best_fixed_brute_force(g, m, summed);
    const OptimalAssignment bp = best_fixed_brute_force_parallel(g, m, summed);
    CHECK(std::abs(dp.total - bf.total) <= 1e-9);
    CHECK(bp.x == bf.x);
    CHECK(bp.total == bf.total);
    // No fixed assignment beats it.
    for (int k = 0; k < 100; ++k) {
      Assignment y(g.n_tasks());
      for (int& d : y) d = static_cast<int>(rng.below(m));
      CHECK(assignment_reward(summed, g, y) <= dp.total + 1e-9);
    }
  }
}

TEST_CASE("offline optimum of a general DAG uses enumeration") {
  const TaskGraph g =
      TaskGraph::from_one_based(5, {{1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 5}, {4, 5}}, 5);
  const auto frames = random_frames(g, 3, 10, 4);
  const OptimalAssignment opt = offline_optimal(frames, g, 3);
  CHECK(opt.total == best_fixed_brute_force(g, 3, time_summed(frames)).total);
  CHECK_THROWS_AS(best_fixed_max_plus(g, 3, time_summed(frames)), Error);
  const TaskGraph big = TaskGraph::chain(21);
  CHECK_THROWS_AS(best_fixed_brute_force(big, 2, NodeEdgeTable(21, 20, 2)), Error);
}

TEST_CASE("fixed policy replays its assignment") {
  FixedPolicy p({1, 0, 2});
  for (int t = 1; t <= 3; ++t) CHECK(p.choose(t) == Assignment{1, 0, 2});
}
