#include "mabsta/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mabsta/error.hpp"
#include "mabsta/trace_io.hpp"

namespace mabsta {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Inverts a discrete CDF at u. Returns the first index with u < cum, falling
// back to the last positive entry when rounding leaves u past the total.
// On return u holds the position inside the picked cell rescaled to [0, 1).
int invert(const std::vector<double>& probs, double& u) {
  double cum = 0.0;
  int last_positive = 0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (probs[j] <= 0.0) continue;
    last_positive = static_cast<int>(j);
    const double next = cum + probs[j];
    if (u < next) {
      u = std::clamp((u - cum) / probs[j], 0.0, std::nextafter(1.0, 0.0));
      return static_cast<int>(j);
    }
    cum = next;
  }
  u = std::nextafter(1.0, 0.0);
  return last_positive;
}

// Normalizes log weights into probabilities.
std::vector<double> softmax(const std::vector<double>& log_w) {
  double hi = kNegInf;
  for (double v : log_w) hi = std::max(hi, v);
  std::vector<double> p(log_w.size(), 0.0);
  if (hi == kNegInf) return p;
  double sum = 0.0;
  for (std::size_t k = 0; k < log_w.size(); ++k) {
    p[k] = std::exp(log_w[k] - hi);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace

void write_estimates_csv(const MabstaBase& agent, std::ostream& out) {
  write_tables_csv(out, agent.graph(), agent.n_devices(), {agent.estimates()},
                   agent.frames_observed());
}

std::size_t arm_index(const Assignment& x, int n_devices) {
  std::size_t idx = 0;
  for (int d : x) idx = idx * static_cast<std::size_t>(n_devices) + static_cast<std::size_t>(d);
  return idx;
}

Assignment arm_from_index(std::size_t index, int n_tasks, int n_devices) {
  Assignment x(n_tasks, 0);
  for (int i = n_tasks - 1; i >= 0; --i) {
    x[i] = static_cast<int>(index % n_devices);
    index /= n_devices;
  }
  return x;
}

// ---- MabstaBase ---------------------------------------------------------

MabstaBase::MabstaBase(const TaskGraph& graph, int n_devices, AgentParams params)
    : graph_(&graph),
      n_devices_(n_devices),
      params_(params),
      rng_(params.seed),
      estimates_(graph.n_tasks(), graph.n_edges(), n_devices) {
  if (n_devices < 1) throw Error(ErrorCode::kConfigError, "device count must be positive");
  if (!(params.gamma > 0.0 && params.gamma <= 1.0)) {
    throw Error(ErrorCode::kBadGamma, "gamma must be in (0,1]");
  }
  if (params.alpha && !(*params.alpha > 0.0)) {
    throw Error(ErrorCode::kConfigError, "alpha must be positive");
  }
  dims_.n_tasks = graph.n_tasks();
  dims_.n_edges = static_cast<int>(graph.n_edges());
  dims_.n_devices = n_devices;
}

double MabstaBase::gamma_at(int t) const {
  if (params_.gamma_mode == GammaMode::kFixed) return params_.gamma;
  // One device leaves nothing to explore; the schedule's log term vanishes.
  if (n_devices_ == 1) return 1.0;
  return bounds::varying_gamma(dims_, t);
}

double MabstaBase::alpha_at(int t) const {
  if (params_.alpha) return *params_.alpha;
  return bounds::coupled_alpha(dims_, gamma_at(t));
}

void MabstaBase::set_estimates(const CumulativeEstimates& estimates) {
  if (estimates.n_tasks() != estimates_.n_tasks() || estimates.n_edges() != estimates_.n_edges() ||
      estimates.n_devices() != estimates_.n_devices()) {
    throw Error(ErrorCode::kDimensionMismatch, "estimate table does not match the agent");
  }
  estimates_ = estimates;
}

void MabstaBase::check_choose_frame(int t) const {
  // Repeated draws at the same frame are allowed; the last one is observed.
  if (t != observed_ + 1) {
    throw Error(ErrorCode::kOutOfOrderFrame,
                "choose(" + std::to_string(t) + ") after " + std::to_string(observed_) +
                    " observed frames");
  }
}

void MabstaBase::record_choice(int t, const Assignment& x, std::vector<double> node_probs,
                               std::vector<double> edge_probs) {
  pending_t_ = t;
  pending_x_ = x;
  node_probs_ = std::move(node_probs);
  edge_probs_ = std::move(edge_probs);
}

void MabstaBase::observe(const Assignment& x, const BanditFeedback& fb, int t) {
  if (pending_t_ == 0 || t != pending_t_) {
    throw Error(ErrorCode::kOutOfOrderFrame, "observe(" + std::to_string(t) +
                                                 ") without a matching choose");
  }
  if (x != pending_x_) {
    throw Error(ErrorCode::kOutOfOrderFrame, "observed assignment differs from the draw");
  }
  const int n = graph_->n_tasks();
  const std::size_t ne = graph_->n_edges();
  if (static_cast<int>(fb.node.size()) != n || fb.edge.size() != ne) {
    throw Error(ErrorCode::kDimensionMismatch, "feedback does not match the task graph");
  }
  for (double r : fb.node) {
    if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorCode::kRewardOutOfRange, "node reward outside [0,1]");
  }
  for (double r : fb.edge) {
    if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorCode::kRewardOutOfRange, "edge reward outside [0,1]");
  }

  std::vector<double> node_hat(n);
  std::vector<double> edge_hat(ne);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    node_hat[i] = fb.node[i] / node_probs_[i];
    estimates_.node(i, x[i]) += node_hat[i];
    total += node_hat[i];
  }
  for (std::size_t e = 0; e < ne; ++e) {
    const Edge& edge = graph_->edges()[e];
    edge_hat[e] = fb.edge[e] / edge_probs_[e];
    estimates_.edge(e, x[edge.from], x[edge.to]) += edge_hat[e];
    total += edge_hat[e];
  }
  on_estimate_increment(x, node_hat, edge_hat);

  last_scaled_estimate_ = alpha_at(t) * total;
  if (params_.check_bounds && !params_.alpha && last_scaled_estimate_ > 1.0 + 1e-12) {
    throw std::logic_error("alpha * R_hat exceeded 1 under coupled alpha");
  }
  observed_ = t;
  pending_t_ = 0;
}

// ---- MabstaAgent --------------------------------------------------------

MabstaAgent::MabstaAgent(const TaskGraph& graph, int n_devices, AgentParams params)
    : MabstaBase(graph, n_devices, params), solver_(graph, n_devices) {}

Assignment MabstaAgent::choose(int t) {
  check_choose_frame(t);
  const int n = graph_->n_tasks();
  const int m = n_devices_;
  const double gamma = gamma_at(t);
  const NodeEdgeTable factors = dp::scaled_factors(estimates_, alpha_at(t));

  Assignment x(n, 0);
  std::vector<int> fixed(n, -1);
  std::vector<dp::FixQuery> queries(m);
  std::vector<double> sums(m);
  if (rng_.uniform() < gamma) {
    for (int i = 0; i < n; ++i) x[i] = static_cast<int>(rng_.below(m));
  } else {
    double u = rng_.uniform();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) queries[j] = {i, j, -1, 0};
      dp::log_weight_sums(solver_, factors, fixed, queries, sums);
      x[i] = invert(softmax(sums), u);
      fixed[i] = x[i];
    }
  }

  // Marginals of the realized entries, cached for observe().
  const std::size_t ne = graph_->n_edges();
  std::vector<dp::FixQuery> marg(1 + n + ne);
  for (int i = 0; i < n; ++i) marg[1 + i] = {i, x[i], -1, 0};
  for (std::size_t e = 0; e < ne; ++e) {
    const Edge& edge = graph_->edges()[e];
    marg[1 + n + e] = {edge.from, x[edge.from], edge.to, x[edge.to]};
  }
  std::vector<double> out(marg.size());
  const std::vector<int> none(n, -1);
  dp::log_weight_sums(solver_, factors, none, marg, out);
  const double log_w = out[0];
  std::vector<double> node_probs(n);
  std::vector<double> edge_probs(ne);
  for (int i = 0; i < n; ++i) {
    node_probs[i] = (1.0 - gamma) * std::exp(out[1 + i] - log_w) + gamma / m;
  }
  for (std::size_t e = 0; e < ne; ++e) {
    edge_probs[e] = (1.0 - gamma) * std::exp(out[1 + n + e] - log_w) +
                    gamma / (static_cast<double>(m) * m);
  }
  record_choice(t, x, std::move(node_probs), std::move(edge_probs));
  return x;
}

double MabstaAgent::arm_probability(const Assignment& y) const {
  const int n = graph_->n_tasks();
  if (static_cast<int>(y.size()) != n) {
    throw Error(ErrorCode::kDimensionMismatch, "assignment length differs from task count");
  }
  for (int d : y) {
    if (d < 0 || d >= n_devices_) throw Error(ErrorCode::kBadIndex, "device index out of range");
  }
  const int t = frames_observed() + 1;
  const double gamma = gamma_at(t);
  const NodeEdgeTable factors = dp::scaled_factors(estimates_, alpha_at(t));
  auto ws = solver_.make_workspace();
  const std::vector<int> none(n, -1);
  const double log_w = solver_.reduce(dp::Semiring::kLogSum, factors, none, ws);
  const double log_y = solver_.reduce(dp::Semiring::kLogSum, factors, y, ws);
  return (1.0 - gamma) * std::exp(log_y - log_w) +
         gamma / std::pow(static_cast<double>(n_devices_), n);
}

std::vector<double> MabstaAgent::node_marginal(TaskId task) const {
  const int t = frames_observed() + 1;
  return dp::marginal_node(*graph_, n_devices_, estimates_, alpha_at(t), gamma_at(t), task);
}

std::vector<double> MabstaAgent::edge_marginal(std::size_t edge) const {
  const int t = frames_observed() + 1;
  return dp::marginal_edge(*graph_, n_devices_, estimates_, alpha_at(t), gamma_at(t), edge);
}

// ---- NaiveMabstaAgent ---------------------------------------------------

NaiveMabstaAgent::NaiveMabstaAgent(const TaskGraph& graph, int n_devices, AgentParams params)
    : MabstaBase(graph, n_devices, params) {
  const std::uint64_t k = dp::arm_count(graph.n_tasks(), n_devices);
  if (k > dp::kMaxArms) throw Error(ErrorCode::kTooLarge, "M^N exceeds the arm table guard");
  arm_estimates_.assign(static_cast<std::size_t>(k), 0.0);
}

Assignment NaiveMabstaAgent::decode(std::size_t arm) const {
  return arm_from_index(arm, graph_->n_tasks(), n_devices_);
}

std::vector<double> NaiveMabstaAgent::arm_probabilities(int t) const {
  const double alpha = alpha_at(t);
  const double gamma = gamma_at(t);
  std::vector<double> log_w(arm_estimates_.size());
  for (std::size_t y = 0; y < log_w.size(); ++y) log_w[y] = alpha * arm_estimates_[y];
  std::vector<double> p = softmax(log_w);
  const double floor = gamma / static_cast<double>(p.size());
  for (double& v : p) v = (1.0 - gamma) * v + floor;
  return p;
}

Assignment NaiveMabstaAgent::choose(int t) {
  check_choose_frame(t);
  const int n = graph_->n_tasks();
  const int m = n_devices_;
  const double gamma = gamma_at(t);
  const double alpha = alpha_at(t);
  const std::size_t k = arm_estimates_.size();

  std::vector<double> log_w(k);
  for (std::size_t y = 0; y < k; ++y) log_w[y] = alpha * arm_estimates_[y];
  const std::vector<double> q = softmax(log_w);

  Assignment x(n, 0);
  if (rng_.uniform() < gamma) {
    for (int i = 0; i < n; ++i) x[i] = static_cast<int>(rng_.below(m));
  } else {
    double u = rng_.uniform();
    x = decode(static_cast<std::size_t>(invert(q, u)));
  }

  const std::size_t ne = graph_->n_edges();
  std::vector<double> node_probs(n, 0.0);
  std::vector<double> edge_probs(ne, 0.0);
  const double floor = gamma / static_cast<double>(k);
  for (std::size_t y = 0; y < k; ++y) {
    const double p = (1.0 - gamma) * q[y] + floor;
    const Assignment a = decode(y);
    for (int i = 0; i < n; ++i) {
      if (a[i] == x[i]) node_probs[i] += p;
    }
    for (std::size_t e = 0; e < ne; ++e) {
      const Edge& edge = graph_->edges()[e];
      if (a[edge.from] == x[edge.from] && a[edge.to] == x[edge.to]) edge_probs[e] += p;
    }
  }
  record_choice(t, x, std::move(node_probs), std::move(edge_probs));
  return x;
}

void NaiveMabstaAgent::on_estimate_increment(const Assignment& x,
                                             const std::vector<double>& node_hat,
                                             const std::vector<double>& edge_hat) {
  const int n = graph_->n_tasks();
  for (std::size_t y = 0; y < arm_estimates_.size(); ++y) {
    const Assignment a = decode(y);
    double inc = 0.0;
    for (int i = 0; i < n; ++i) {
      if (a[i] == x[i]) inc += node_hat[i];
    }
    for (std::size_t e = 0; e < edge_hat.size(); ++e) {
      const Edge& edge = graph_->edges()[e];
      if (a[edge.from] == x[edge.from] && a[edge.to] == x[edge.to]) inc += edge_hat[e];
    }
    arm_estimates_[y] += inc;
  }
}

void NaiveMabstaAgent::set_estimates(const CumulativeEstimates& estimates) {
  MabstaBase::set_estimates(estimates);
  // R_tilde_y is linear in the per-entry sums.
  for (std::size_t y = 0; y < arm_estimates_.size(); ++y) {
    const Assignment a = decode(y);
    double s = 0.0;
    for (int i = 0; i < graph_->n_tasks(); ++i) s += estimates_.node(i, a[i]);
    for (std::size_t e = 0; e < graph_->n_edges(); ++e) {
      const Edge& edge = graph_->edges()[e];
      s += estimates_.edge(e, a[edge.from], a[edge.to]);
    }
    arm_estimates_[y] = s;
  }
}

double NaiveMabstaAgent::arm_probability(const Assignment& y) const {
  if (static_cast<int>(y.size()) != graph_->n_tasks()) {
    throw Error(ErrorCode::kDimensionMismatch, "assignment length differs from task count");
  }
  for (int d : y) {
    if (d < 0 || d >= n_devices_) throw Error(ErrorCode::kBadIndex, "device index out of range");
  }
  return arm_probabilities(frames_observed() + 1)[arm_index(y, n_devices_)];
}

std::vector<double> NaiveMabstaAgent::node_marginal(TaskId task) const {
  if (task < 0 || task >= graph_->n_tasks()) throw Error(ErrorCode::kBadIndex, "task out of range");
  const std::vector<double> p = arm_probabilities(frames_observed() + 1);
  std::vector<double> out(n_devices_, 0.0);
  for (std::size_t y = 0; y < p.size(); ++y) out[decode(y)[task]] += p[y];
  return out;
}

std::vector<double> NaiveMabstaAgent::edge_marginal(std::size_t edge) const {
  if (edge >= graph_->n_edges()) throw Error(ErrorCode::kBadIndex, "edge out of range");
  const std::vector<double> p = arm_probabilities(frames_observed() + 1);
  const Edge& ed = graph_->edges()[edge];
  std::vector<double> out(static_cast<std::size_t>(n_devices_) * n_devices_, 0.0);
  for (std::size_t y = 0; y < p.size(); ++y) {
    const Assignment a = decode(y);
    out[static_cast<std::size_t>(a[ed.from]) * n_devices_ + a[ed.to]] += p[y];
  }
  return out;
}

}  // namespace mabsta
