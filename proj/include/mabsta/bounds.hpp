#pragma once

namespace mabsta::bounds {

struct ProblemDims {
  int n_tasks = 1;
  int n_edges = 0;
  int n_devices = 2;
  double horizon = 1.0;
  // Offline optimum; when unknown use worst_case_rmax().
  double r_max = 1.0;

  double worst_case_rmax() const { return static_cast<double>(n_tasks + n_edges) * horizon; }
};

struct BoundValue {
  double value = 0.0;
  // False outside M >= 3, |E| >= 3, where the second-moment step used by the
  // bound only holds with the weaker M = 2 constant.
  bool valid = true;
};

// (e-1) gamma Rmax + M (N + |E| M) ln(M^N) / gamma. Throws BadGamma unless
// 0 < gamma < 1.
BoundValue regret_bound(const ProblemDims& dims, double gamma);

struct TunedBound {
  double gamma_star = 1.0;
  double bound = 0.0;
  bool valid = true;
};

// Exploration rate minimizing the bound with Rmax = (N + |E|) T, and the
// resulting 2.63 sqrt((N+|E|)(N+|E|M) M N T ln M).
TunedBound tuned_bound(const ProblemDims& dims);

// Frames until the slope of the tuned bound drops below c.
double learning_time(const ProblemDims& dims, double c);

// Per-frame exploration rate: the tuned gamma with T replaced by t.
double varying_gamma(const ProblemDims& dims, int t);

// alpha = gamma / (M (N + |E| M)), the pairing under which alpha * R_hat <= 1.
double coupled_alpha(const ProblemDims& dims, double gamma);

}  // namespace mabsta::bounds
