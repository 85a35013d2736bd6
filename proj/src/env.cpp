#include "mabsta/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mabsta/error.hpp"

namespace mabsta {

const std::array<DeviceIterations, 10> kMeasuredDevices = {{
    {18, 14031, 32989},
    {21, 37259, 54186},
    {22, 23669, 65500},
    {24, 61773, 65500},
    {26, 19475, 44902},
    {28, 10839, 58526},
    {31, 10868, 28770},
    {36, 41467, 64191},
    {38, 12386, 27992},
    {41, 15447, 32423},
}};

double latency_to_reward(double latency, double lo, double hi) {
  if (!(lo < hi)) throw Error(ErrorCode::kDegenerateRange, "latency range requires lo < hi");
  const double clipped = std::clamp(latency, lo, hi);
  return (hi - clipped) / (hi - lo);
}

namespace {

void check_assignment(const FrameRewards& frame, const TaskGraph& graph, const Assignment& x) {
  if (frame.n_tasks() != graph.n_tasks() || frame.n_edges() != graph.n_edges()) {
    throw Error(ErrorCode::kDimensionMismatch, "frame does not match the task graph");
  }
  if (static_cast<int>(x.size()) != graph.n_tasks()) {
    throw Error(ErrorCode::kDimensionMismatch, "assignment length differs from task count");
  }
  for (int d : x) {
    if (d < 0 || d >= frame.n_devices()) {
      throw Error(ErrorCode::kDimensionMismatch, "assignment device out of range");
    }
  }
}

}  // namespace

BanditFeedback feedback_for(const FrameRewards& frame, const TaskGraph& graph,
                            const Assignment& x) {
  check_assignment(frame, graph, x);
  BanditFeedback fb;
  fb.node.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) fb.node[i] = frame.node(static_cast<int>(i), x[i]);
  fb.edge.resize(graph.n_edges());
  for (std::size_t e = 0; e < graph.n_edges(); ++e) {
    const Edge& edge = graph.edges()[e];
    fb.edge[e] = frame.edge(e, x[edge.from], x[edge.to]);
  }
  return fb;
}

double assignment_reward(const FrameRewards& frame, const TaskGraph& graph, const Assignment& x) {
  double total = 0.0;
  for (int i = 0; i < graph.n_tasks(); ++i) total += frame.node(i, x[i]);
  for (std::size_t e = 0; e < graph.n_edges(); ++e) {
    const Edge& edge = graph.edges()[e];
    total += frame.edge(e, x[edge.from], x[edge.to]);
  }
  return total;
}

// -- Environment ------------------------------------------------------------

Environment::Environment(const TaskGraph& graph, int n_devices)
    : n_tasks_(graph.n_tasks()), edges_(graph.edges()), n_devices_(n_devices) {
  if (n_devices_ <= 0) throw Error(ErrorCode::kConfigError, "device count must be positive");
}

FrameRewards Environment::next_frame(int t) {
  if (t != last_t_ + 1) {
    throw Error(ErrorCode::kOutOfOrderFrame,
                "expected frame " + std::to_string(last_t_ + 1) + ", got " + std::to_string(t));
  }
  FrameRewards frame(n_tasks_, edges_.size(), n_devices_);
  generate(t, frame);
  last_t_ = t;
  return frame;
}

std::vector<FrameRewards> materialize(Environment& env, int n_frames) {
  std::vector<FrameRewards> frames;
  frames.reserve(n_frames);
  for (int t = 1; t <= n_frames; ++t) frames.push_back(env.next_frame(t));
  return frames;
}

// -- Simple generators --------------------------------------------------------

ConstantEnv::ConstantEnv(const TaskGraph& graph, int n_devices, double value)
    : Environment(graph, n_devices), value_(value) {
  if (value < 0.0 || value > 1.0) throw Error(ErrorCode::kRewardOutOfRange, "constant reward");
}

void ConstantEnv::generate(int, FrameRewards& frame) {
  std::fill(frame.node_values().begin(), frame.node_values().end(), value_);
  std::fill(frame.edge_values().begin(), frame.edge_values().end(), value_);
}

UniformEnv::UniformEnv(const TaskGraph& graph, int n_devices, std::uint64_t seed)
    : Environment(graph, n_devices), rng_(seed) {}

void UniformEnv::generate(int, FrameRewards& frame) {
  for (double& r : frame.node_values()) r = rng_.uniform();
  for (double& r : frame.edge_values()) r = rng_.uniform();
}

SwitchingEnv::SwitchingEnv(const TaskGraph& graph, int n_devices, SwitchingParams params,
                           std::uint64_t seed)
    : Environment(graph, n_devices), params_(params), rng_(seed) {
  if (params_.period <= 0) throw Error(ErrorCode::kConfigError, "switching period must be positive");
  if (params_.low < 0.0 || params_.high > 1.0 || params_.low > params_.high) {
    throw Error(ErrorCode::kConfigError, "switching levels must satisfy 0 <= low <= high <= 1");
  }
}

int SwitchingEnv::favoured_device(int t) const {
  long long start = 0;
  long long length = params_.period;
  int phase = 0;
  while (t > start + length) {
    start += length;
    if (params_.doubling) length *= 2;
    ++phase;
  }
  return phase % 2 == 0 ? 0 : n_devices() - 1;
}

void SwitchingEnv::generate(int t, FrameRewards& frame) {
  const int fav = favoured_device(t);
  auto draw = [&](bool favoured) {
    const double base = favoured ? params_.high : params_.low;
    const double jitter = params_.noise * (2.0 * rng_.uniform() - 1.0);
    return std::clamp(base + jitter, 0.0, 1.0);
  };
  for (int i = 0; i < n_tasks(); ++i)
    for (int j = 0; j < n_devices(); ++j) frame.node(i, j) = draw(j == fav);
  for (std::size_t e = 0; e < n_edges(); ++e)
    for (int j = 0; j < n_devices(); ++j)
      for (int k = 0; k < n_devices(); ++k) frame.edge(e, j, k) = draw(j == fav && k == fav);
}

// -- Trace emulation -----------------------------------------------------------

TraceDeviceModel default_trace_model(int n_devices, std::uint64_t seed) {
  if (n_devices <= 0 || n_devices > static_cast<int>(kMeasuredDevices.size())) {
    throw Error(ErrorCode::kConfigError, "trace model supports 1 to 10 devices");
  }
  TraceDeviceModel model;
  model.devices.assign(kMeasuredDevices.begin(), kMeasuredDevices.begin() + n_devices);
  model.link_mean_ms.assign(static_cast<std::size_t>(n_devices) * n_devices, 0.5);
  Rng rng(derive_seed(seed, 0x11f));
  for (int j = 0; j < n_devices; ++j) {
    for (int k = j + 1; k < n_devices; ++k) {
      const double mean = 15.0 + 45.0 * rng.uniform();
      model.link_mean_ms[j * n_devices + k] = mean;
      model.link_mean_ms[k * n_devices + j] = mean;
    }
  }
  return model;
}

TraceEnv::TraceEnv(const TaskGraph& graph, TraceDeviceModel model, std::uint64_t seed)
    : Environment(graph, model.n_devices()), model_(std::move(model)), rng_(seed) {
  for (const auto& d : model_.devices) {
    if (d.lo > d.hi) throw Error(ErrorCode::kConfigError, "iteration range requires lo <= hi");
  }
  for (double m : model_.link_mean_ms) {
    if (!(m > 0.0)) throw Error(ErrorCode::kConfigError, "link latencies must be positive");
  }

  // Normalization bounds come from a calibration batch on its own stream,
  // then stay fixed for the whole run.
  Rng calibration = rng_.split(0xca1);
  std::swap(calibration, rng_);
  const int m = n_devices();
  compute_range_ = {std::numeric_limits<double>::infinity(),
                    -std::numeric_limits<double>::infinity()};
  link_range_ = compute_range_;
  for (int s = 0; s < kCalibrationSamples; ++s) {
    const double c = sample_compute_ms(static_cast<int>(rng_.below(m)));
    compute_range_.lo = std::min(compute_range_.lo, c);
    compute_range_.hi = std::max(compute_range_.hi, c);
    const int from = static_cast<int>(rng_.below(m));
    const int to = static_cast<int>(rng_.below(m));
    const double l = sample_link_ms(from, to);
    link_range_.lo = std::min(link_range_.lo, l);
    link_range_.hi = std::max(link_range_.hi, l);
  }
  std::swap(calibration, rng_);
  if (!(compute_range_.lo < compute_range_.hi)) compute_range_.hi = compute_range_.lo + 1.0;
  if (!(link_range_.lo < link_range_.hi)) link_range_.hi = link_range_.lo + 1.0;
}

std::int64_t TraceEnv::sample_iterations(int device) {
  const auto& d = model_.devices[device];
  return rng_.between(d.lo, d.hi);
}

double TraceEnv::sample_compute_ms(int device) {
  return static_cast<double>(sample_iterations(device)) * model_.us_per_iteration * 1e-3;
}

double TraceEnv::sample_link_ms(int from, int to) {
  const double sigma = model_.link_sigma;
  return model_.link_mean(from, to) * std::exp(sigma * rng_.normal() - 0.5 * sigma * sigma);
}

void TraceEnv::generate(int, FrameRewards& frame) {
  for (int i = 0; i < n_tasks(); ++i)
    for (int j = 0; j < n_devices(); ++j)
      frame.node(i, j) =
          latency_to_reward(sample_compute_ms(j), compute_range_.lo, compute_range_.hi);
  for (std::size_t e = 0; e < n_edges(); ++e)
    for (int j = 0; j < n_devices(); ++j)
      for (int k = 0; k < n_devices(); ++k)
        frame.edge(e, j, k) =
            latency_to_reward(sample_link_ms(j, k), link_range_.lo, link_range_.hi);
}

// -- Markov swap -------------------------------------------------------------------

MarkovParams default_markov_params() {
  MarkovParams p;
  p.transitions = {
      Transition{{{0.9, 0.1}, {0.7, 0.3}}},  // mostly good
      Transition{{{0.3, 0.7}, {0.1, 0.9}}},  // mostly bad
  };
  return p;
}

double stationary_good(const Transition& p) {
  const double to_bad = p[0][1];
  const double to_good = p[1][0];
  if (to_bad + to_good == 0.0) return 0.5;
  return to_good / (to_bad + to_good);
}

MarkovSwapEnv::MarkovSwapEnv(const TaskGraph& graph, MarkovParams params, std::uint64_t seed)
    : Environment(graph, static_cast<int>(params.transitions.size())),
      params_(std::move(params)),
      rng_(seed) {
  for (const auto& p : params_.transitions) {
    for (const auto& row : p) {
      if (row[0] < 0.0 || row[1] < 0.0 || std::abs(row[0] + row[1] - 1.0) > 1e-12) {
        throw Error(ErrorCode::kConfigError, "transition rows must be distributions");
      }
    }
  }
  for (double r : {params_.good_reward, params_.bad_reward, params_.edge_reward}) {
    if (r < 0.0 || r > 1.0) throw Error(ErrorCode::kConfigError, "reward levels must be in [0,1]");
  }
  if (params_.swap_frame > 0 && params_.transitions.size() < 2) {
    throw Error(ErrorCode::kConfigError, "swapping needs two devices");
  }
  states_.resize(params_.transitions.size());
  for (std::size_t d = 0; d < states_.size(); ++d) {
    states_[d] = rng_.uniform() < stationary_good(params_.transitions[d]) ? 0 : 1;
  }
}

const Transition& MarkovSwapEnv::transition_at(int device, int t) const {
  if (params_.swap_frame > 0 && t > params_.swap_frame && device < 2) {
    return params_.transitions[1 - device];
  }
  return params_.transitions[device];
}

void MarkovSwapEnv::generate(int t, FrameRewards& frame) {
  if (t > 1) {
    for (std::size_t d = 0; d < states_.size(); ++d) {
      const auto& p = transition_at(static_cast<int>(d), t);
      states_[d] = rng_.uniform() < p[states_[d]][0] ? 0 : 1;
    }
  }
  for (int i = 0; i < n_tasks(); ++i)
    for (int j = 0; j < n_devices(); ++j)
      frame.node(i, j) = states_[j] == 0 ? params_.good_reward : params_.bad_reward;
  std::fill(frame.edge_values().begin(), frame.edge_values().end(), params_.edge_reward);
}

// -- Replay ------------------------------------------------------------------------

ReplayEnv::ReplayEnv(const TaskGraph& graph, int n_devices, std::vector<FrameRewards> frames)
    : Environment(graph, n_devices), frames_(std::move(frames)) {
  for (const auto& f : frames_) {
    if (f.n_tasks() != graph.n_tasks() || f.n_edges() != graph.n_edges() ||
        f.n_devices() != n_devices) {
      throw Error(ErrorCode::kDimensionMismatch, "replayed frame does not match graph/devices");
    }
  }
}

void ReplayEnv::generate(int t, FrameRewards& frame) {
  if (t > static_cast<int>(frames_.size())) {
    throw Error(ErrorCode::kTraceExhausted,
                "trace has " + std::to_string(frames_.size()) + " frames, requested " +
                    std::to_string(t));
  }
  frame = frames_[t - 1];
}

}  // namespace mabsta
