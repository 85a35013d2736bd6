#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mabsta/agent.hpp"
#include "mabsta/env.hpp"
#include "mabsta/graph.hpp"
#include "mabsta/rng.hpp"
#include "mabsta/types.hpp"

namespace mabsta {

struct Exp3Params {
  // Horizon used by the standard tuning gamma = min(1, sqrt(K ln K / ((e-1) T))).
  int horizon = 1;
  std::optional<double> gamma;  // overrides the tuned value
  std::uint64_t seed = 0;
};

// Exp3 over the flattened arm set [M]^N with payoff
// (sum of node and edge rewards) / (N + |E|). Sampling uses a Fenwick tree
// of linear weights relative to a running log offset. Throws TooLarge past
// dp::kMaxArms arms.
class Exp3Flat final : public Policy {
 public:
  Exp3Flat(const TaskGraph& graph, int n_devices, Exp3Params params);

  Assignment choose(int t) override;
  void observe(const Assignment& x, const BanditFeedback& fb, int t) override;

  std::size_t n_arms() const { return n_arms_; }
  double gamma() const { return gamma_; }
  double eta() const { return eta_; }
  double arm_probability(std::size_t arm) const;

 private:
  double total_weight() const;
  void add(std::size_t arm, double delta);
  std::size_t find(double mass) const;
  void rebuild();

  const TaskGraph* graph_;
  int n_devices_;
  std::size_t n_arms_;
  double gamma_;
  double eta_;
  Rng rng_;
  std::vector<double> log_w_;
  std::vector<double> tree_;  // Fenwick, 1-based
  double offset_ = 0.0;
  double max_log_w_ = 0.0;
  int updates_since_rebuild_ = 0;
  std::size_t last_arm_ = 0;
  double last_prob_ = 1.0;
};

// Uniform over [M]^N every frame; ignores feedback.
class UniformRandom final : public Policy {
 public:
  UniformRandom(const TaskGraph& graph, int n_devices, std::uint64_t seed);
  Assignment choose(int t) override;
  void observe(const Assignment&, const BanditFeedback&, int) override {}

 private:
  int n_tasks_;
  int n_devices_;
  Rng rng_;
};

// Belief policy for the two-state device model: puts every task on the
// device most likely to be good next frame, using the given (possibly
// stale) transition matrices. A frame whose mean node reward exceeds 0.5
// counts as a good observation of the device that was used. Beliefs start
// at the stationary distribution; ties go to the lowest device index.
class MyopicMarkov final : public Policy {
 public:
  MyopicMarkov(const TaskGraph& graph, std::vector<Transition> transitions);
  Assignment choose(int t) override;
  void observe(const Assignment& x, const BanditFeedback& fb, int t) override;

  // P{good} of each device for the coming frame.
  const std::vector<double>& beliefs() const { return belief_; }
  void set_beliefs(std::vector<double> beliefs) { belief_ = std::move(beliefs); }

 private:
  int n_tasks_;
  std::vector<Transition> transitions_;
  std::vector<double> belief_;
};

// Replays one assignment forever.
class FixedPolicy final : public Policy {
 public:
  explicit FixedPolicy(Assignment x) : x_(std::move(x)) {}
  Assignment choose(int) override { return x_; }
  void observe(const Assignment&, const BanditFeedback&, int) override {}

 private:
  Assignment x_;
};

struct OptimalAssignment {
  Assignment x;
  double total = 0.0;
};

// Per-entry sums of the frames.
NodeEdgeTable time_summed(const std::vector<FrameRewards>& frames);

// Best fixed assignment of a summed table by enumeration; the first arm in
// lexicographic order wins ties. Throws TooLarge past dp::kMaxArms.
OptimalAssignment best_fixed_brute_force(const TaskGraph& graph, int n_devices,
                                         const NodeEdgeTable& summed);
// OpenMP split of the same enumeration; identical result.
OptimalAssignment best_fixed_brute_force_parallel(const TaskGraph& graph, int n_devices,
                                                  const NodeEdgeTable& summed);

// Max-plus DP on supported structures; tasks are fixed in index order, each
// to the lowest device within 1e-9 relative of the best. Throws
// UnsupportedStructure for general DAGs.
OptimalAssignment best_fixed_max_plus(const TaskGraph& graph, int n_devices,
                                      const NodeEdgeTable& summed);

// Best fixed assignment over `frames`. Uses the DP when the structure allows
// it, else enumeration.
OptimalAssignment offline_optimal(const std::vector<FrameRewards>& frames, const TaskGraph& graph,
                                  int n_devices);

}  // namespace mabsta
