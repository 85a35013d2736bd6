#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mabsta/graph.hpp"
#include "mabsta/rng.hpp"
#include "mabsta/types.hpp"

namespace mabsta {

// Maps a latency into a reward on [0, 1]: hi -> 0, lo -> 1, linear between,
// clipped outside. Throws DegenerateRange unless lo < hi.
double latency_to_reward(double latency, double lo, double hi);

// Extracts the entries selected by `x`. Throws DimensionMismatch.
BanditFeedback feedback_for(const FrameRewards& frame, const TaskGraph& graph,
                            const Assignment& x);

// Reward of assignment `x` on a full frame (sum over nodes and edges).
double assignment_reward(const FrameRewards& frame, const TaskGraph& graph, const Assignment& x);

// A stateful reward sequence. Frames must be requested as t = 1, 2, ...
class Environment {
 public:
  Environment(const TaskGraph& graph, int n_devices);
  virtual ~Environment() = default;

  FrameRewards next_frame(int t);

  int n_tasks() const { return n_tasks_; }
  std::size_t n_edges() const { return edges_.size(); }
  int n_devices() const { return n_devices_; }

 protected:
  virtual void generate(int t, FrameRewards& frame) = 0;
  const std::vector<Edge>& edges() const { return edges_; }

 private:
  int n_tasks_;
  std::vector<Edge> edges_;
  int n_devices_;
  int last_t_ = 0;
};

class ConstantEnv final : public Environment {
 public:
  ConstantEnv(const TaskGraph& graph, int n_devices, double value);

 protected:
  void generate(int t, FrameRewards& frame) override;

 private:
  double value_;
};

// I.i.d. uniform rewards on [0, 1].
class UniformEnv final : public Environment {
 public:
  UniformEnv(const TaskGraph& graph, int n_devices, std::uint64_t seed);

 protected:
  void generate(int t, FrameRewards& frame) override;

 private:
  Rng rng_;
};

// Adversary alternating between two favoured assignments (all tasks on the
// first device, then all on the last). Phase k lasts period * 2^k frames when
// doubling, otherwise `period` frames. Favoured entries pay `high`, others
// `low`, plus uniform noise of half-width `noise`, clipped to [0, 1].
struct SwitchingParams {
  int period = 500;
  bool doubling = true;
  double high = 0.9;
  double low = 0.1;
  double noise = 0.05;
};

class SwitchingEnv final : public Environment {
 public:
  SwitchingEnv(const TaskGraph& graph, int n_devices, SwitchingParams params,
               std::uint64_t seed);

  // Favoured device of every task at frame t.
  int favoured_device(int t) const;

 protected:
  void generate(int t, FrameRewards& frame) override;

 private:
  SwitchingParams params_;
  Rng rng_;
};

// Compute-iteration ranges of the ten measured devices, ascending by ID.
struct DeviceIterations {
  int device_id;
  std::int64_t lo;
  std::int64_t hi;
};
extern const std::array<DeviceIterations, 10> kMeasuredDevices;

// Synthetic stand-in for the measured traces. Computation latency is
// iterations * us_per_iteration with iterations ~ U(lo, hi); link latency is
// log-normal around a per-pair mean.
struct TraceDeviceModel {
  std::vector<DeviceIterations> devices;
  std::vector<double> link_mean_ms;  // M x M, row = sender
  double link_sigma = 0.3;
  double us_per_iteration = 1.0;

  int n_devices() const { return static_cast<int>(devices.size()); }
  double link_mean(int from, int to) const { return link_mean_ms[from * n_devices() + to]; }
};

// First n_devices measured devices; remote link means ~ U(15, 60) ms drawn
// symmetric from `seed`, local transfers 0.5 ms.
TraceDeviceModel default_trace_model(int n_devices, std::uint64_t seed);

struct LatencyRange {
  double lo = 0.0;
  double hi = 1.0;
};

class TraceEnv final : public Environment {
 public:
  static constexpr int kCalibrationSamples = 10000;

  TraceEnv(const TaskGraph& graph, TraceDeviceModel model, std::uint64_t seed);

  const TraceDeviceModel& model() const { return model_; }
  LatencyRange compute_range() const { return compute_range_; }
  LatencyRange link_range() const { return link_range_; }

  std::int64_t sample_iterations(int device);
  double sample_compute_ms(int device);
  double sample_link_ms(int from, int to);

 protected:
  void generate(int t, FrameRewards& frame) override;

 private:
  TraceDeviceModel model_;
  Rng rng_;
  LatencyRange compute_range_;
  LatencyRange link_range_;
};

// Two-state ("good" = 0, "bad" = 1) Markov chain per device.
using Transition = std::array<std::array<double, 2>, 2>;

struct MarkovParams {
  std::vector<Transition> transitions;  // one per device, before the swap
  double good_reward = 0.9;
  double bad_reward = 0.1;
  double edge_reward = 0.0;
  int swap_frame = 100;  // devices 0 and 1 exchange matrices for t > swap_frame; 0 = never
};

MarkovParams default_markov_params();

// Stationary probability of the good state.
double stationary_good(const Transition& p);

class MarkovSwapEnv final : public Environment {
 public:
  MarkovSwapEnv(const TaskGraph& graph, MarkovParams params, std::uint64_t seed);

  const MarkovParams& params() const { return params_; }
  // Matrix governing device d's transition into frame t.
  const Transition& transition_at(int device, int t) const;
  // State of each device at the last generated frame.
  const std::vector<int>& states() const { return states_; }

 protected:
  void generate(int t, FrameRewards& frame) override;

 private:
  MarkovParams params_;
  Rng rng_;
  std::vector<int> states_;
};

// Replays frames read from a trace file. Throws TraceExhausted past the end.
class ReplayEnv final : public Environment {
 public:
  ReplayEnv(const TaskGraph& graph, int n_devices, std::vector<FrameRewards> frames);

  std::size_t length() const { return frames_.size(); }

 protected:
  void generate(int t, FrameRewards& frame) override;

 private:
  std::vector<FrameRewards> frames_;
};

// Generates frames 1..n_frames.
std::vector<FrameRewards> materialize(Environment& env, int n_frames);

}  // namespace mabsta
