#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mabsta/bounds.hpp"
#include "mabsta/dp.hpp"
#include "mabsta/graph.hpp"
#include "mabsta/rng.hpp"
#include "mabsta/types.hpp"

namespace mabsta {

// Choose/observe state machine shared by every policy. Calls alternate
// strictly: choose(t), then observe(x, fb, t), for t = 1, 2, ...
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Assignment choose(int t) = 0;
  virtual void observe(const Assignment& x, const BanditFeedback& fb, int t) = 0;
};

enum class GammaMode { kFixed, kVarying };

struct AgentParams {
  double gamma = 0.1;
  // Explicit alpha; unset couples alpha = gamma / (M (N + |E| M)).
  std::optional<double> alpha;
  GammaMode gamma_mode = GammaMode::kFixed;
  std::uint64_t seed = 0;
  // Throw std::logic_error if alpha * R_hat exceeds 1 for coupled alpha.
  bool check_bounds = false;
};

// Common state of both MABSTA implementations: the cumulative node/edge
// estimates and the per-frame exploration schedule.
class MabstaBase : public Policy {
 public:
  MabstaBase(const TaskGraph& graph, int n_devices, AgentParams params);

  void observe(const Assignment& x, const BanditFeedback& fb, int t) final;

  // Exploration rate and alpha in effect at frame t.
  double gamma_at(int t) const;
  double alpha_at(int t) const;

  // Probability of drawing `y` at the next frame.
  virtual double arm_probability(const Assignment& y) const = 0;
  // P{x_i = j} at the next frame, per device.
  virtual std::vector<double> node_marginal(TaskId task) const = 0;
  // P{x_m = j, x_n = k} at the next frame, row-major.
  virtual std::vector<double> edge_marginal(std::size_t edge) const = 0;

  const CumulativeEstimates& estimates() const { return estimates_; }
  // Replaces the cumulative estimates (restoring a snapshot, test setups).
  virtual void set_estimates(const CumulativeEstimates& estimates);
  const TaskGraph& graph() const { return *graph_; }
  int n_devices() const { return n_devices_; }
  const AgentParams& params() const { return params_; }
  int frames_observed() const { return observed_; }

  // Marginals cached when the current frame's assignment was drawn.
  const std::vector<double>& chosen_node_probs() const { return node_probs_; }
  const std::vector<double>& chosen_edge_probs() const { return edge_probs_; }
  // alpha * R_hat(x) of the last observed frame (the largest R_hat_y).
  double last_scaled_estimate() const { return last_scaled_estimate_; }

 protected:
  // Records the draw of frame t; subclasses call this from choose().
  void record_choice(int t, const Assignment& x, std::vector<double> node_probs,
                     std::vector<double> edge_probs);
  void check_choose_frame(int t) const;
  // Hook for implementations tracking extra per-arm state.
  virtual void on_estimate_increment(const Assignment&, const std::vector<double>&,
                                     const std::vector<double>&) {}

  const TaskGraph* graph_;
  int n_devices_;
  AgentParams params_;
  bounds::ProblemDims dims_;
  Rng rng_;
  CumulativeEstimates estimates_;

 private:
  int observed_ = 0;
  int pending_t_ = 0;
  Assignment pending_x_;
  std::vector<double> node_probs_;
  std::vector<double> edge_probs_;
  double last_scaled_estimate_ = 0.0;
};

// Polynomial-time agent: weight sums by the chain/tree DP, sampling by the
// chain rule over tasks in index order. The sampler consumes one uniform
// for the explore/exploit split, then either N device draws or one uniform
// inverted through the conditional CDFs (equivalent to inverting the arm CDF
// in lexicographic order).
class MabstaAgent final : public MabstaBase {
 public:
  // Throws UnsupportedStructure for general DAGs.
  MabstaAgent(const TaskGraph& graph, int n_devices, AgentParams params);

  Assignment choose(int t) override;
  double arm_probability(const Assignment& y) const override;
  std::vector<double> node_marginal(TaskId task) const override;
  std::vector<double> edge_marginal(std::size_t edge) const override;

 private:
  dp::ChainTreeSolver solver_;
};

// Literal exponential-arm reference: one weight per arm in [M]^N, marginals
// by enumeration. Same RNG protocol as MabstaAgent. Throws TooLarge past
// dp::kMaxArms arms.
class NaiveMabstaAgent final : public MabstaBase {
 public:
  NaiveMabstaAgent(const TaskGraph& graph, int n_devices, AgentParams params);

  Assignment choose(int t) override;
  double arm_probability(const Assignment& y) const override;
  std::vector<double> node_marginal(TaskId task) const override;
  std::vector<double> edge_marginal(std::size_t edge) const override;

  void set_estimates(const CumulativeEstimates& estimates) override;

  std::size_t n_arms() const { return arm_estimates_.size(); }
  // Cumulative R_hat_y of each arm, lexicographic order.
  const std::vector<double>& arm_estimates() const { return arm_estimates_; }

 private:
  std::vector<double> arm_probabilities(int t) const;
  Assignment decode(std::size_t arm) const;
  void on_estimate_increment(const Assignment& x, const std::vector<double>& node_hat,
                             const std::vector<double>& edge_hat) override;

  std::vector<double> arm_estimates_;
};

// Snapshot of the estimates in the trace CSV layout: one row, t = frames
// observed so far.
void write_estimates_csv(const MabstaBase& agent, std::ostream& out);

// Lexicographic arm index of an assignment (task 0 most significant).
std::size_t arm_index(const Assignment& x, int n_devices);
Assignment arm_from_index(std::size_t index, int n_tasks, int n_devices);

}  // namespace mabsta
