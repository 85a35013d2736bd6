#include "mabsta/dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mabsta/error.hpp"

namespace mabsta::dp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <Semiring S>
inline double combine(double a, double b) {
  if constexpr (S == Semiring::kLogSum) {
    return log_add(a, b);
  } else {
    return std::max(a, b);
  }
}

// Reduces terms[0..n) under the semiring's addition.
template <Semiring S>
inline double reduce_terms(const double* terms, int n) {
  double hi = kNegInf;
  for (int k = 0; k < n; ++k) hi = std::max(hi, terms[k]);
  if constexpr (S == Semiring::kMaxPlus) {
    return hi;
  } else {
    if (hi == kNegInf) return kNegInf;
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
      if (terms[k] != kNegInf) sum += std::exp(terms[k] - hi);
    }
    return hi + std::log(sum);
  }
}

void check_inputs(const TaskGraph& graph, int n_devices, const NodeEdgeTable& table,
                  const ConditionalFix& fix) {
  if (n_devices <= 0) throw Error(ErrorCode::kBadIndex, "device count must be positive");
  if (table.n_tasks() != graph.n_tasks() || table.n_edges() != graph.n_edges() ||
      table.n_devices() != n_devices) {
    throw Error(ErrorCode::kDimensionMismatch, "estimates do not match graph/devices");
  }
  if (fix.n_tasks() != graph.n_tasks()) {
    throw Error(ErrorCode::kDimensionMismatch, "fix size differs from task count");
  }
  for (int d : fix.dense()) {
    if (d >= n_devices) throw Error(ErrorCode::kBadIndex, "fixed device out of range");
  }
}

OmegaTable run_omega(const TaskGraph& graph, int n_devices, const CumulativeEstimates& estimates,
                     double alpha, const ConditionalFix& fix) {
  check_inputs(graph, n_devices, estimates, fix);
  if (!(alpha > 0.0)) throw Error(ErrorCode::kConfigError, "alpha must be positive");
  const ChainTreeSolver solver(graph, n_devices);
  auto ws = solver.make_workspace();
  OmegaTable table;
  table.n_tasks = graph.n_tasks();
  table.n_devices = n_devices;
  table.log_omega.resize(static_cast<std::size_t>(graph.n_tasks()) * n_devices);
  table.root.resize(n_devices);
  solver.solve(Semiring::kLogSum, scaled_factors(estimates, alpha), fix.dense(), table.root, ws,
               table.log_omega.data());
  return table;
}

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(ErrorCode::kBadGamma, "gamma must be in [0,1]");
}

}  // namespace

double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kNegInf) return a;
  return a + std::log1p(std::exp(b - a));
}

// -- ConditionalFix -------------------------------------------------------------

ConditionalFix::ConditionalFix(int n_tasks, std::initializer_list<std::pair<TaskId, int>> entries)
    : device_(n_tasks, -1) {
  for (const auto& [task, device] : entries) fix(task, device);
}

ConditionalFix& ConditionalFix::fix(TaskId task, int device) {
  if (task < 0 || task >= n_tasks() || device < 0) {
    throw Error(ErrorCode::kBadIndex, "fix entry out of range");
  }
  if (device_[task] >= 0 && device_[task] != device) {
    throw Error(ErrorCode::kFixConflict, "task " + std::to_string(task + 1) +
                                             " fixed to two devices");
  }
  device_[task] = device;
  return *this;
}

bool ConditionalFix::empty() const {
  return std::all_of(device_.begin(), device_.end(), [](int d) { return d < 0; });
}

bool OmegaTable::defined(TaskId task) const { return !std::isnan(at(task, 0)); }

double OmegaTable::log_total() const {
  double total = kNegInf;
  for (double v : root) total = log_add(total, v);
  return total;
}

NodeEdgeTable scaled_factors(const CumulativeEstimates& estimates, double alpha) {
  NodeEdgeTable out = estimates;
  for (double& v : out.node_values()) v *= alpha;
  for (double& v : out.edge_values()) v *= alpha;
  return out;
}

std::uint64_t arm_count(int n_tasks, int n_devices) {
  std::uint64_t count = 1;
  for (int i = 0; i < n_tasks; ++i) {
    count *= static_cast<std::uint64_t>(n_devices);
    if (count > kMaxArms) return kMaxArms + 1;
  }
  return count;
}

// -- ChainTreeSolver ------------------------------------------------------------

ChainTreeSolver::ChainTreeSolver(const TaskGraph& graph, int n_devices)
    : graph_(&graph), n_devices_(n_devices) {
  const auto& s = graph.structure();
  if (s.kind == StructureKind::kGeneralDag) {
    throw Error(ErrorCode::kUnsupportedStructure,
                "weight DP covers trees, serial trees and parallel chains of trees only");
  }
  if (n_devices <= 0) throw Error(ErrorCode::kBadIndex, "device count must be positive");

  const int n = graph.n_tasks();
  child_edges_.assign(n, {});
  context_edges_.assign(n, {});
  std::vector<int> chain_of(n, -1);

  for (std::size_t c = 0; c < s.chains.size(); ++c) {
    const auto& blocks = s.chains[c].blocks;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const TaskId upstream = b > 0 ? blocks[b - 1].root : -1;
      for (TaskId v : blocks[b].order) {
        chain_of[v] = static_cast<int>(c);
        for (int e : graph.in_edges(v)) {
          (graph.edges()[e].from == upstream ? context_edges_[v] : child_edges_[v]).push_back(e);
        }
      }
    }
  }

  root_edges_.assign(s.chains.size(), {});
  for (int e : graph.in_edges(graph.root())) {
    const TaskId u = graph.edges()[e].from;
    const int c = chain_of[u];
    const auto& blocks = s.chains[c].blocks;
    const bool from_upstream = blocks.size() > 1 && blocks[blocks.size() - 2].root == u;
    (from_upstream ? root_edges_[c].context_edges : root_edges_[c].child_edges).push_back(e);
  }
}

ChainTreeSolver::Workspace ChainTreeSolver::make_workspace() const {
  Workspace ws;
  ws.values.assign(static_cast<std::size_t>(graph_->n_tasks()) * n_devices_, kNegInf);
  ws.terms.assign(4 * static_cast<std::size_t>(n_devices_), 0.0);
  ws.fixed.assign(graph_->n_tasks(), -1);
  return ws;
}

template <Semiring S>
void ChainTreeSolver::block_pass(const NodeEdgeTable& factors, std::span<const int> fixed,
                                 const TreeBlock& block, int context_device, Workspace& ws) const {
  const int m = n_devices_;
  const double* edge = factors.edge_values().data();
  double* terms = ws.terms.data() + 3 * m;

  for (TaskId v : block.order) {
    double* val = ws.values.data() + static_cast<std::size_t>(v) * m;
    const int f = fixed[v];
    for (int j = 0; j < m; ++j) val[j] = (f >= 0 && f != j) ? kNegInf : factors.node(v, j);

    if (context_device >= 0) {
      for (int e : context_edges_[v]) {
        const double* row = edge + (static_cast<std::size_t>(e) * m + context_device) * m;
        for (int j = 0; j < m; ++j) val[j] += row[j];
      }
    }

    for (int e : child_edges_[v]) {
      const TaskId u = graph_->edges()[e].from;
      const double* child = ws.values.data() + static_cast<std::size_t>(u) * m;
      const double* block_e = edge + static_cast<std::size_t>(e) * m * m;
      const int fu = fixed[u];
      for (int j = 0; j < m; ++j) {
        if (val[j] == kNegInf) continue;
        if (fu >= 0) {
          val[j] += block_e[fu * m + j] + child[fu];
          continue;
        }
        for (int y = 0; y < m; ++y) terms[y] = block_e[y * m + j] + child[y];
        val[j] += reduce_terms<S>(terms, m);
      }
    }
  }
}

template <Semiring S>
void ChainTreeSolver::solve_impl(const NodeEdgeTable& factors, std::span<const int> fixed,
                                 std::span<double> root_out, Workspace& ws,
                                 double* omega_out) const {
  const int m = n_devices_;
  const TaskId root = graph_->root();
  const auto& chains = graph_->structure().chains;
  const double* edge = factors.edge_values().data();
  double* upstream = ws.terms.data();   // log value per upstream-root device
  double* acc = ws.terms.data() + m;
  double* terms = ws.terms.data() + 3 * m;

  if (omega_out) {
    std::fill(omega_out, omega_out + static_cast<std::size_t>(graph_->n_tasks()) * m,
              std::numeric_limits<double>::quiet_NaN());
  }
  const int froot = fixed[root];
  for (int j = 0; j < m; ++j) root_out[j] = (froot >= 0 && froot != j) ? kNegInf : factors.node(root, j);

  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto& blocks = chains[c].blocks;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const bool last = b + 1 == blocks.size();
      const bool has_upstream = b > 0;
      std::fill(acc, acc + m, kNegInf);

      for (int ctx = has_upstream ? 0 : -1; ctx < (has_upstream ? m : 0); ++ctx) {
        const double offset = has_upstream ? upstream[ctx] : 0.0;
        if (offset == kNegInf) continue;
        block_pass<S>(factors, fixed, blocks[b], ctx, ws);

        if (!last) {
          const double* val = ws.values.data() + static_cast<std::size_t>(blocks[b].root) * m;
          for (int j = 0; j < m; ++j) acc[j] = combine<S>(acc[j], val[j] + offset);
          continue;
        }
        for (int j = 0; j < m; ++j) {
          if (root_out[j] == kNegInf) continue;
          double t = offset;
          for (int e : root_edges_[c].child_edges) {
            const TaskId u = graph_->edges()[e].from;
            const double* child = ws.values.data() + static_cast<std::size_t>(u) * m;
            const double* block_e = edge + static_cast<std::size_t>(e) * m * m;
            const int fu = fixed[u];
            if (fu >= 0) {
              t += block_e[fu * m + j] + child[fu];
            } else {
              for (int y = 0; y < m; ++y) terms[y] = block_e[y * m + j] + child[y];
              t += reduce_terms<S>(terms, m);
            }
          }
          for (int e : root_edges_[c].context_edges) {
            t += edge[(static_cast<std::size_t>(e) * m + ctx) * m + j];
          }
          acc[j] = combine<S>(acc[j], t);
        }
      }

      if (!last) {
        std::copy(acc, acc + m, upstream);
        if (omega_out) std::copy(acc, acc + m, omega_out + static_cast<std::size_t>(blocks[b].root) * m);
      } else {
        for (int j = 0; j < m; ++j) root_out[j] += acc[j];
      }
    }

    // The first block of a chain is resolved once without conditioning, so
    // its per-node values are genuine descendant sums.
    if (omega_out) {
      for (TaskId v : blocks.front().order) {
        std::copy_n(ws.values.data() + static_cast<std::size_t>(v) * m, m,
                    omega_out + static_cast<std::size_t>(v) * m);
      }
    }
  }
  if (omega_out) std::copy(root_out.begin(), root_out.end(), omega_out + static_cast<std::size_t>(root) * m);
}

void ChainTreeSolver::solve(Semiring semiring, const NodeEdgeTable& factors,
                            std::span<const int> fixed, std::span<double> root_out, Workspace& ws,
                            double* omega_out) const {
  if (semiring == Semiring::kLogSum) {
    solve_impl<Semiring::kLogSum>(factors, fixed, root_out, ws, omega_out);
  } else {
    solve_impl<Semiring::kMaxPlus>(factors, fixed, root_out, ws, omega_out);
  }
}

double ChainTreeSolver::reduce(Semiring semiring, const NodeEdgeTable& factors,
                               std::span<const int> fixed, Workspace& ws) const {
  // Third slot of the scratch buffer is not touched by solve_impl.
  std::span<double> root(ws.terms.data() + 2 * n_devices_, n_devices_);
  solve(semiring, factors, fixed, root, ws);
  return semiring == Semiring::kLogSum ? reduce_terms<Semiring::kLogSum>(root.data(), n_devices_)
                                       : reduce_terms<Semiring::kMaxPlus>(root.data(), n_devices_);
}

// -- Public operations ------------------------------------------------------------

OmegaTable omega_tree(const TaskGraph& graph, int n_devices, const CumulativeEstimates& estimates,
                      double alpha, const ConditionalFix& fix) {
  if (graph.structure().kind != StructureKind::kTree) {
    throw Error(ErrorCode::kNotATree, "graph is " + to_string(graph.structure().kind));
  }
  return run_omega(graph, n_devices, estimates, alpha, fix);
}

OmegaTable omega_serial(const TaskGraph& graph, int n_devices,
                        const CumulativeEstimates& estimates, double alpha,
                        const ConditionalFix& fix) {
  const auto kind = graph.structure().kind;
  if (kind != StructureKind::kTree && kind != StructureKind::kSerialTrees) {
    throw Error(ErrorCode::kNotSerialTrees, "graph is " + to_string(kind));
  }
  return run_omega(graph, n_devices, estimates, alpha, fix);
}

OmegaTable omega_parallel_chains(const TaskGraph& graph, int n_devices,
                                 const CumulativeEstimates& estimates, double alpha,
                                 const ConditionalFix& fix) {
  return run_omega(graph, n_devices, estimates, alpha, fix);
}

std::vector<double> marginal_node(const TaskGraph& graph, int n_devices,
                                  const CumulativeEstimates& estimates, double alpha,
                                  double gamma, TaskId task) {
  check_gamma(gamma);
  check_inputs(graph, n_devices, estimates, ConditionalFix(graph.n_tasks()));
  if (task < 0 || task >= graph.n_tasks()) throw Error(ErrorCode::kBadIndex, "task out of range");
  const ChainTreeSolver solver(graph, n_devices);
  const auto factors = scaled_factors(estimates, alpha);
  std::vector<FixQuery> queries(n_devices);
  for (int j = 0; j < n_devices; ++j) queries[j] = {task, j};
  std::vector<double> sums(n_devices);
  const std::vector<int> base(graph.n_tasks(), -1);
  log_weight_sums(solver, factors, base, queries, sums);

  const double total = reduce_terms<Semiring::kLogSum>(sums.data(), n_devices);
  std::vector<double> p(n_devices);
  for (int j = 0; j < n_devices; ++j) {
    p[j] = (1.0 - gamma) * std::exp(sums[j] - total) + gamma / n_devices;
  }
  return p;
}

std::vector<double> marginal_edge(const TaskGraph& graph, int n_devices,
                                  const CumulativeEstimates& estimates, double alpha,
                                  double gamma, std::size_t edge) {
  check_gamma(gamma);
  check_inputs(graph, n_devices, estimates, ConditionalFix(graph.n_tasks()));
  if (edge >= graph.n_edges()) throw Error(ErrorCode::kBadIndex, "edge out of range");
  const ChainTreeSolver solver(graph, n_devices);
  const auto factors = scaled_factors(estimates, alpha);
  const Edge& e = graph.edges()[edge];
  const int mm = n_devices * n_devices;
  std::vector<FixQuery> queries(mm);
  for (int j = 0; j < n_devices; ++j)
    for (int k = 0; k < n_devices; ++k) queries[j * n_devices + k] = {e.from, j, e.to, k};
  std::vector<double> sums(mm);
  const std::vector<int> base(graph.n_tasks(), -1);
  log_weight_sums(solver, factors, base, queries, sums);

  const double total = reduce_terms<Semiring::kLogSum>(sums.data(), mm);
  std::vector<double> p(mm);
  for (int q = 0; q < mm; ++q) {
    p[q] = (1.0 - gamma) * std::exp(sums[q] - total) + gamma / mm;
  }
  return p;
}

}  // namespace mabsta::dp
