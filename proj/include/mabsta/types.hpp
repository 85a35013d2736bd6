#pragma once

#include <cstddef>
#include <vector>

namespace mabsta {

// Device index per task (0-based). An element of [M]^N: one bandit arm.
using Assignment = std::vector<int>;

// Dense per-node and per-edge tables over devices. Node entries are indexed
// (task, device); edge entries (edge, device of source, device of target).
// Used for a frame's rewards, for cumulative estimates, and for
// time-summed reward totals.
class NodeEdgeTable {
 public:
  NodeEdgeTable() = default;
  NodeEdgeTable(int n_tasks, std::size_t n_edges, int n_devices, double fill = 0.0)
      : n_tasks_(n_tasks),
        n_edges_(n_edges),
        n_devices_(n_devices),
        node_(static_cast<std::size_t>(n_tasks) * n_devices, fill),
        edge_(n_edges * n_devices * n_devices, fill) {}

  int n_tasks() const { return n_tasks_; }
  std::size_t n_edges() const { return n_edges_; }
  int n_devices() const { return n_devices_; }

  double& node(int task, int device) { return node_[index(task, device)]; }
  double node(int task, int device) const { return node_[index(task, device)]; }
  double& edge(std::size_t e, int from_device, int to_device) {
    return edge_[index(e, from_device, to_device)];
  }
  double edge(std::size_t e, int from_device, int to_device) const {
    return edge_[index(e, from_device, to_device)];
  }

  std::vector<double>& node_values() { return node_; }
  const std::vector<double>& node_values() const { return node_; }
  std::vector<double>& edge_values() { return edge_; }
  const std::vector<double>& edge_values() const { return edge_; }

  std::size_t size() const { return node_.size() + edge_.size(); }

  NodeEdgeTable& operator+=(const NodeEdgeTable& other) {
    for (std::size_t k = 0; k < node_.size(); ++k) node_[k] += other.node_[k];
    for (std::size_t k = 0; k < edge_.size(); ++k) edge_[k] += other.edge_[k];
    return *this;
  }

  friend bool operator==(const NodeEdgeTable&, const NodeEdgeTable&) = default;

 private:
  std::size_t index(int task, int device) const {
    return static_cast<std::size_t>(task) * n_devices_ + device;
  }
  std::size_t index(std::size_t e, int j, int k) const {
    return (e * n_devices_ + j) * n_devices_ + k;
  }

  int n_tasks_ = 0;
  std::size_t n_edges_ = 0;
  int n_devices_ = 0;
  std::vector<double> node_;
  std::vector<double> edge_;
};

// Full reward matrices of one frame, every entry in [0, 1].
using FrameRewards = NodeEdgeTable;

// Importance-weighted running sums; the efficient agent's entire state.
using CumulativeEstimates = NodeEdgeTable;

// Rewards revealed for the chosen assignment only.
struct BanditFeedback {
  std::vector<double> node;  // per task, at its assigned device
  std::vector<double> edge;  // per edge, at its endpoints' devices

  double total() const {
    double s = 0.0;
    for (double r : node) s += r;
    for (double r : edge) s += r;
    return s;
  }
};

}  // namespace mabsta
