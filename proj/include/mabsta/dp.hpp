#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "mabsta/graph.hpp"
#include "mabsta/types.hpp"

namespace mabsta::dp {

// Partial assignment used to condition weight sums. Dense: one slot per task,
// -1 when free.
class ConditionalFix {
 public:
  explicit ConditionalFix(int n_tasks) : device_(n_tasks, -1) {}
  ConditionalFix(int n_tasks, std::initializer_list<std::pair<TaskId, int>> entries);

  // Throws FixConflict if `task` is already fixed to a different device.
  ConditionalFix& fix(TaskId task, int device);

  int n_tasks() const { return static_cast<int>(device_.size()); }
  int device_of(TaskId task) const { return device_[task]; }
  bool empty() const;
  std::span<const int> dense() const { return device_; }

 private:
  std::vector<int> device_;
};

// Per (task, device) log sub-problem values. For trees every entry is the log
// of the summed weight of the task's descendants given its device. Composite
// structures also define entries for the tasks of each chain's first tree and
// for the roots of later trees (the total including every upstream tree);
// entries that only exist conditionally hold NaN.
struct OmegaTable {
  int n_tasks = 0;
  int n_devices = 0;
  std::vector<double> log_omega;
  std::vector<double> root;  // log omega of the graph root, per device

  double at(TaskId task, int device) const { return log_omega[task * n_devices + device]; }
  bool defined(TaskId task) const;
  // log of the summed weight of every admissible assignment.
  double log_total() const;
};

enum class Semiring {
  kLogSum,  // (log-sum-exp, +): log of summed weights
  kMaxPlus  // (max, +): best total
};

// One extra (task, device) pair, or two, applied over a shared base fix.
struct FixQuery {
  TaskId task_a = -1;
  int device_a = 0;
  TaskId task_b = -1;
  int device_b = 0;
};

// Precomputed resolution plan for a supported graph. Immutable; evaluation
// methods may be called concurrently as long as each caller passes its own
// Workspace.
class ChainTreeSolver {
 public:
  // Throws UnsupportedStructure for GeneralDag graphs.
  ChainTreeSolver(const TaskGraph& graph, int n_devices);

  struct Workspace {
    std::vector<double> values;  // N x M block-pass values
    std::vector<double> terms;
    std::vector<int> fixed;
  };
  Workspace make_workspace() const;

  // Root values under `fixed` (dense, -1 = free). `factors` holds the
  // per-entry log weights (alpha * estimate) for kLogSum or raw rewards for
  // kMaxPlus. Writes M values into `root_out`; when `omega_out` is non-null
  // (N x M) it receives the per-node values described by OmegaTable.
  void solve(Semiring semiring, const NodeEdgeTable& factors, std::span<const int> fixed,
             std::span<double> root_out, Workspace& ws, double* omega_out = nullptr) const;

  // Reduction of solve() over the root's devices.
  double reduce(Semiring semiring, const NodeEdgeTable& factors, std::span<const int> fixed,
                Workspace& ws) const;

  const TaskGraph& graph() const { return *graph_; }
  int n_devices() const { return n_devices_; }

 private:
  struct RootChainEdges {
    std::vector<int> child_edges;
    std::vector<int> context_edges;
  };

  template <Semiring S>
  void solve_impl(const NodeEdgeTable& factors, std::span<const int> fixed,
                  std::span<double> root_out, Workspace& ws, double* omega_out) const;

  template <Semiring S>
  void block_pass(const NodeEdgeTable& factors, std::span<const int> fixed, const TreeBlock& block,
                  int context_device, Workspace& ws) const;

  const TaskGraph* graph_;
  int n_devices_;
  std::vector<std::vector<int>> child_edges_;    // per task, in-edges from its own tree
  std::vector<std::vector<int>> context_edges_;  // per task, in-edges from the upstream root
  std::vector<RootChainEdges> root_edges_;       // per chain
};

// Log-domain factors alpha * estimates.
NodeEdgeTable scaled_factors(const CumulativeEstimates& estimates, double alpha);

// Tree-only weight DP; throws NotATree.
OmegaTable omega_tree(const TaskGraph& graph, int n_devices, const CumulativeEstimates& estimates,
                      double alpha, const ConditionalFix& fix);

// Serial trees (a single tree is the one-block case); throws NotSerialTrees.
OmegaTable omega_serial(const TaskGraph& graph, int n_devices,
                        const CumulativeEstimates& estimates, double alpha,
                        const ConditionalFix& fix);

// Any supported structure; throws UnsupportedStructure for general DAGs.
OmegaTable omega_parallel_chains(const TaskGraph& graph, int n_devices,
                                 const CumulativeEstimates& estimates, double alpha,
                                 const ConditionalFix& fix);

// Exhaustive log Σ_y w_y over assignments consistent with `fix`. Independent of
// the DP; used as its oracle. Throws TooLarge when M^N exceeds kMaxArms.
inline constexpr std::uint64_t kMaxArms = 1'000'000;
double enumerate_weight_sum(const TaskGraph& graph, int n_devices,
                            const CumulativeEstimates& estimates, double alpha,
                            const ConditionalFix& fix);

// M^N, or kMaxArms + 1 if larger.
std::uint64_t arm_count(int n_tasks, int n_devices);

// P{x_i = j} under the exploration-mixed distribution.
std::vector<double> marginal_node(const TaskGraph& graph, int n_devices,
                                  const CumulativeEstimates& estimates, double alpha,
                                  double gamma, TaskId task);

// P{x_m = j, x_n = k} for edge index `edge`, row-major in (j, k).
std::vector<double> marginal_edge(const TaskGraph& graph, int n_devices,
                                  const CumulativeEstimates& estimates, double alpha,
                                  double gamma, std::size_t edge);

// Batched conditioned weight sums: out[q] = log Σ over assignments consistent
// with base_fixed plus queries[q]. Contradictory queries yield -inf. The
// serial loop is the reference the OpenMP kernel is tested against; both
// return bit-identical results.
void log_weight_sums_serial(const ChainTreeSolver& solver, const NodeEdgeTable& log_factors,
                            std::span<const int> base_fixed, std::span<const FixQuery> queries,
                            std::span<double> out);
void log_weight_sums_parallel(const ChainTreeSolver& solver, const NodeEdgeTable& log_factors,
                              std::span<const int> base_fixed, std::span<const FixQuery> queries,
                              std::span<double> out);

// Dispatches to the parallel kernel for batches worth a thread team.
void log_weight_sums(const ChainTreeSolver& solver, const NodeEdgeTable& log_factors,
                     std::span<const int> base_fixed, std::span<const FixQuery> queries,
                     std::span<double> out);

// Numerically stable log(exp(a) + exp(b)).
double log_add(double a, double b);

}  // namespace mabsta::dp
