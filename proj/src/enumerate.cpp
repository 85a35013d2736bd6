#include <cmath>
#include <limits>

#include "mabsta/dp.hpp"
#include "mabsta/error.hpp"

namespace mabsta::dp {

// Brute force over [M]^N. Shares nothing with ChainTreeSolver: every arm's
// log weight is summed from scratch and the total is a two-pass max-shifted
// log-sum-exp.
double enumerate_weight_sum(const TaskGraph& graph, int n_devices,
                            const CumulativeEstimates& estimates, double alpha,
                            const ConditionalFix& fix) {
  const int n = graph.n_tasks();
  if (n_devices <= 0) throw Error(ErrorCode::kBadIndex, "device count must be positive");
  if (arm_count(n, n_devices) > kMaxArms) {
    throw Error(ErrorCode::kTooLarge, "M^N exceeds the enumeration guard");
  }
  if (estimates.n_tasks() != n || estimates.n_edges() != graph.n_edges() ||
      estimates.n_devices() != n_devices || fix.n_tasks() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "inputs do not match the task graph");
  }

  std::vector<double> log_weights;
  std::vector<int> y(n, 0);
  while (true) {
    bool admissible = true;
    for (int i = 0; i < n; ++i) {
      const int f = fix.device_of(i);
      if (f >= 0 && y[i] != f) admissible = false;
    }
    if (admissible) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += estimates.node(i, y[i]);
      for (std::size_t e = 0; e < graph.n_edges(); ++e) {
        const Edge& edge = graph.edges()[e];
        s += estimates.edge(e, y[edge.from], y[edge.to]);
      }
      log_weights.push_back(alpha * s);
    }
    int pos = n - 1;
    while (pos >= 0 && ++y[pos] == n_devices) y[pos--] = 0;
    if (pos < 0) break;
  }

  if (log_weights.empty()) return -std::numeric_limits<double>::infinity();
  double hi = log_weights.front();
  for (double w : log_weights) hi = std::max(hi, w);
  double sum = 0.0;
  for (double w : log_weights) sum += std::exp(w - hi);
  return hi + std::log(sum);
}

}  // namespace mabsta::dp
