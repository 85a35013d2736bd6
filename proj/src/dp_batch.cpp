#include <algorithm>
#include <limits>

#include <omp.h>

#include "mabsta/dp.hpp"
#include "mabsta/error.hpp"

namespace mabsta::dp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Below this many queries a thread team costs more than it saves.
constexpr std::size_t kParallelThreshold = 16;

bool apply(std::vector<int>& fixed, TaskId task, int device) {
  if (task < 0) return true;
  if (fixed[task] >= 0 && fixed[task] != device) return false;
  fixed[task] = device;
  return true;
}

double evaluate(const ChainTreeSolver& solver, const NodeEdgeTable& log_factors,
                std::span<const int> base_fixed, const FixQuery& q,
                ChainTreeSolver::Workspace& ws) {
  std::copy(base_fixed.begin(), base_fixed.end(), ws.fixed.begin());
  if (!apply(ws.fixed, q.task_a, q.device_a) || !apply(ws.fixed, q.task_b, q.device_b)) {
    return kNegInf;
  }
  return solver.reduce(Semiring::kLogSum, log_factors, ws.fixed, ws);
}

void check_batch(const ChainTreeSolver& solver, std::span<const int> base_fixed,
                 std::span<const FixQuery> queries, std::span<double> out) {
  if (static_cast<int>(base_fixed.size()) != solver.graph().n_tasks() ||
      out.size() != queries.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "batch buffers do not match the solver");
  }
}

}  // namespace

void log_weight_sums_serial(const ChainTreeSolver& solver, const NodeEdgeTable& log_factors,
                            std::span<const int> base_fixed, std::span<const FixQuery> queries,
                            std::span<double> out) {
  check_batch(solver, base_fixed, queries, out);
  auto ws = solver.make_workspace();
  for (std::size_t q = 0; q < queries.size(); ++q) {
    out[q] = evaluate(solver, log_factors, base_fixed, queries[q], ws);
  }
}

void log_weight_sums_parallel(const ChainTreeSolver& solver, const NodeEdgeTable& log_factors,
                              std::span<const int> base_fixed, std::span<const FixQuery> queries,
                              std::span<double> out) {
  check_batch(solver, base_fixed, queries, out);
  const auto n = static_cast<std::ptrdiff_t>(queries.size());
#pragma omp parallel
  {
    auto ws = solver.make_workspace();
#pragma omp for schedule(static)
    for (std::ptrdiff_t q = 0; q < n; ++q) {
      out[q] = evaluate(solver, log_factors, base_fixed, queries[q], ws);
    }
  }
}

void log_weight_sums(const ChainTreeSolver& solver, const NodeEdgeTable& log_factors,
                     std::span<const int> base_fixed, std::span<const FixQuery> queries,
                     std::span<double> out) {
  if (queries.size() >= kParallelThreshold && omp_get_max_threads() > 1 && !omp_in_parallel()) {
    log_weight_sums_parallel(solver, log_factors, base_fixed, queries, out);
  } else {
    log_weight_sums_serial(solver, log_factors, base_fixed, queries, out);
  }
}

}  // namespace mabsta::dp
