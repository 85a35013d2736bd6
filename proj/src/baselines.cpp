#include "mabsta/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <omp.h>

#include "mabsta/dp.hpp"
#include "mabsta/error.hpp"

namespace mabsta {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Linear weights are exp(log_w - offset); rebase before they overflow.
constexpr double kRebaseGap = 500.0;
constexpr int kRebuildEvery = 4096;

std::size_t checked_arms(int n_tasks, int n_devices) {
  if (n_devices < 1) throw Error(ErrorCode::kConfigError, "device count must be positive");
  const std::uint64_t k = dp::arm_count(n_tasks, n_devices);
  if (k > dp::kMaxArms) throw Error(ErrorCode::kTooLarge, "M^N exceeds the arm guard");
  return static_cast<std::size_t>(k);
}

void check_summed(const TaskGraph& graph, int n_devices, const NodeEdgeTable& summed) {
  if (summed.n_tasks() != graph.n_tasks() || summed.n_edges() != graph.n_edges() ||
      summed.n_devices() != n_devices) {
    throw Error(ErrorCode::kDimensionMismatch, "reward table does not match the task graph");
  }
}

// Odometer step in lexicographic order; false after the last arm.
bool advance(Assignment& y, int n_devices) {
  int pos = static_cast<int>(y.size()) - 1;
  while (pos >= 0 && ++y[pos] == n_devices) y[pos--] = 0;
  return pos >= 0;
}

}  // namespace

// ---- Exp3Flat -----------------------------------------------------------

Exp3Flat::Exp3Flat(const TaskGraph& graph, int n_devices, Exp3Params params)
    : graph_(&graph),
      n_devices_(n_devices),
      n_arms_(checked_arms(graph.n_tasks(), n_devices)),
      rng_(params.seed),
      log_w_(n_arms_, 0.0),
      tree_(n_arms_ + 1, 0.0) {
  if (params.gamma) {
    gamma_ = *params.gamma;
  } else {
    if (params.horizon < 1) throw Error(ErrorCode::kConfigError, "horizon must be positive");
    const double k = static_cast<double>(n_arms_);
    gamma_ = n_arms_ == 1 ? 1.0
                          : std::min(1.0, std::sqrt(k * std::log(k) /
                                                    ((std::numbers::e - 1.0) * params.horizon)));
  }
  if (!(gamma_ > 0.0 && gamma_ <= 1.0)) throw Error(ErrorCode::kBadGamma, "gamma must be in (0,1]");
  eta_ = gamma_ / static_cast<double>(n_arms_);
  rebuild();
}

void Exp3Flat::rebuild() {
  max_log_w_ = *std::max_element(log_w_.begin(), log_w_.end());
  offset_ = max_log_w_;
  std::fill(tree_.begin(), tree_.end(), 0.0);
  for (std::size_t a = 0; a < n_arms_; ++a) tree_[a + 1] = std::exp(log_w_[a] - offset_);
  // Linear-time Fenwick construction.
  for (std::size_t i = 1; i <= n_arms_; ++i) {
    const std::size_t parent = i + (i & (~i + 1));
    if (parent <= n_arms_) tree_[parent] += tree_[i];
  }
  updates_since_rebuild_ = 0;
}

void Exp3Flat::add(std::size_t arm, double delta) {
  for (std::size_t i = arm + 1; i <= n_arms_; i += i & (~i + 1)) tree_[i] += delta;
}

double Exp3Flat::total_weight() const {
  double s = 0.0;
  for (std::size_t i = n_arms_; i > 0; i -= i & (~i + 1)) s += tree_[i];
  return s;
}

std::size_t Exp3Flat::find(double mass) const {
  std::size_t pos = 0;
  std::size_t step = 1;
  while (step * 2 <= n_arms_) step *= 2;
  for (; step > 0; step /= 2) {
    const std::size_t next = pos + step;
    if (next <= n_arms_ && tree_[next] <= mass) {
      pos = next;
      mass -= tree_[next];
    }
  }
  // pos arms have cumulative weight <= mass; skip zero-weight tails.
  pos = std::min(pos, n_arms_ - 1);
  while (pos > 0 && std::exp(log_w_[pos] - offset_) == 0.0) --pos;
  return pos;
}

double Exp3Flat::arm_probability(std::size_t arm) const {
  return (1.0 - gamma_) * std::exp(log_w_[arm] - offset_) / total_weight() +
         gamma_ / static_cast<double>(n_arms_);
}

Assignment Exp3Flat::choose(int) {
  std::size_t arm;
  if (rng_.uniform() < gamma_) {
    arm = static_cast<std::size_t>(rng_.below(n_arms_));
  } else {
    arm = find(rng_.uniform() * total_weight());
  }
  last_arm_ = arm;
  last_prob_ = arm_probability(arm);
  return arm_from_index(arm, graph_->n_tasks(), n_devices_);
}

void Exp3Flat::observe(const Assignment& x, const BanditFeedback& fb, int) {
  if (arm_index(x, n_devices_) != last_arm_) {
    throw Error(ErrorCode::kOutOfOrderFrame, "observed assignment differs from the draw");
  }
  const double scale = static_cast<double>(graph_->n_tasks() + graph_->n_edges());
  const double reward = fb.total() / scale;
  if (!(reward >= 0.0 && reward <= 1.0 + 1e-12)) {
    throw Error(ErrorCode::kRewardOutOfRange, "payoff outside [0,1]");
  }
  const double before = std::exp(log_w_[last_arm_] - offset_);
  log_w_[last_arm_] += eta_ * reward / last_prob_;
  max_log_w_ = std::max(max_log_w_, log_w_[last_arm_]);
  if (max_log_w_ - offset_ > kRebaseGap || ++updates_since_rebuild_ >= kRebuildEvery) {
    rebuild();
  } else {
    add(last_arm_, std::exp(log_w_[last_arm_] - offset_) - before);
  }
}

// ---- UniformRandom ------------------------------------------------------

UniformRandom::UniformRandom(const TaskGraph& graph, int n_devices, std::uint64_t seed)
    : n_tasks_(graph.n_tasks()), n_devices_(n_devices), rng_(seed) {
  if (n_devices < 1) throw Error(ErrorCode::kConfigError, "device count must be positive");
}

Assignment UniformRandom::choose(int) {
  Assignment x(n_tasks_);
  for (int& d : x) d = static_cast<int>(rng_.below(n_devices_));
  return x;
}

// ---- MyopicMarkov -------------------------------------------------------

MyopicMarkov::MyopicMarkov(const TaskGraph& graph, std::vector<Transition> transitions)
    : n_tasks_(graph.n_tasks()), transitions_(std::move(transitions)) {
  if (transitions_.empty()) throw Error(ErrorCode::kConfigError, "no transition matrices");
  for (const Transition& p : transitions_) belief_.push_back(stationary_good(p));
}

Assignment MyopicMarkov::choose(int) {
  const auto best = std::max_element(belief_.begin(), belief_.end());
  return Assignment(n_tasks_, static_cast<int>(best - belief_.begin()));
}

void MyopicMarkov::observe(const Assignment& x, const BanditFeedback& fb, int) {
  double mean = 0.0;
  for (double r : fb.node) mean += r;
  mean /= static_cast<double>(fb.node.size());
  const int used = x.front();
  belief_[used] = mean > 0.5 ? 1.0 : 0.0;
  for (std::size_t d = 0; d < belief_.size(); ++d) {
    const Transition& p = transitions_[d];
    belief_[d] = belief_[d] * p[0][0] + (1.0 - belief_[d]) * p[1][0];
  }
}

// ---- offline optimum ----------------------------------------------------

NodeEdgeTable time_summed(const std::vector<FrameRewards>& frames) {
  if (frames.empty()) throw Error(ErrorCode::kConfigError, "no frames to sum");
  NodeEdgeTable sum(frames.front().n_tasks(), frames.front().n_edges(), frames.front().n_devices());
  for (const FrameRewards& f : frames) sum += f;
  return sum;
}

OptimalAssignment best_fixed_brute_force(const TaskGraph& graph, int n_devices,
                                         const NodeEdgeTable& summed) {
  checked_arms(graph.n_tasks(), n_devices);
  check_summed(graph, n_devices, summed);
  OptimalAssignment best{{}, kNegInf};
  Assignment y(graph.n_tasks(), 0);
  do {
    const double v = assignment_reward(summed, graph, y);
    if (v > best.total) best = {y, v};
  } while (advance(y, n_devices));
  return best;
}

OptimalAssignment best_fixed_brute_force_parallel(const TaskGraph& graph, int n_devices,
                                                  const NodeEdgeTable& summed) {
  const std::size_t k = checked_arms(graph.n_tasks(), n_devices);
  check_summed(graph, n_devices, summed);
  const int n = graph.n_tasks();
  const auto arms = static_cast<std::ptrdiff_t>(k);
  std::size_t best_arm = 0;
  double best_value = kNegInf;
#pragma omp parallel
  {
    std::size_t local_arm = 0;
    double local_value = kNegInf;
#pragma omp for schedule(static)
    for (std::ptrdiff_t a = 0; a < arms; ++a) {
      const double v = assignment_reward(summed, graph, arm_from_index(a, n, n_devices));
      if (v > local_value) {
        local_value = v;
        local_arm = static_cast<std::size_t>(a);
      }
    }
#pragma omp critical
    {
      if (local_value > best_value || (local_value == best_value && local_arm < best_arm)) {
        best_value = local_value;
        best_arm = local_arm;
      }
    }
  }
  return {arm_from_index(best_arm, n, n_devices), best_value};
}

OptimalAssignment best_fixed_max_plus(const TaskGraph& graph, int n_devices,
                                      const NodeEdgeTable& summed) {
  check_summed(graph, n_devices, summed);
  const dp::ChainTreeSolver solver(graph, n_devices);
  auto ws = solver.make_workspace();
  const int n = graph.n_tasks();
  std::vector<int> fixed(n, -1);
  for (int i = 0; i < n; ++i) {
    std::vector<double> v(n_devices);
    double hi = kNegInf;
    for (int j = 0; j < n_devices; ++j) {
      fixed[i] = j;
      v[j] = solver.reduce(dp::Semiring::kMaxPlus, summed, fixed, ws);
      hi = std::max(hi, v[j]);
    }
    const double tol = 1e-9 * (1.0 + std::abs(hi));
    int pick = 0;
    while (v[pick] < hi - tol) ++pick;
    fixed[i] = pick;
  }
  Assignment x(fixed.begin(), fixed.end());
  const double total = assignment_reward(summed, graph, x);
  return {std::move(x), total};
}

OptimalAssignment offline_optimal(const std::vector<FrameRewards>& frames, const TaskGraph& graph,
                                  int n_devices) {
  const NodeEdgeTable summed = time_summed(frames);
  if (graph.structure().kind != StructureKind::kGeneralDag) {
    return best_fixed_max_plus(graph, n_devices, summed);
  }
  return best_fixed_brute_force_parallel(graph, n_devices, summed);
}

}  // namespace mabsta
