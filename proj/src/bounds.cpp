#include "mabsta/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mabsta/error.hpp"

namespace mabsta::bounds {

namespace {

constexpr double kEMinus1 = std::numbers::e - 1.0;

double coupling(const ProblemDims& d) {
  return static_cast<double>(d.n_devices) * (d.n_tasks + static_cast<double>(d.n_edges) * d.n_devices);
}

double log_arms(const ProblemDims& d) { return d.n_tasks * std::log(static_cast<double>(d.n_devices)); }

bool second_moment_regime(const ProblemDims& d) { return d.n_devices >= 3 && d.n_edges >= 3; }

void check_dims(const ProblemDims& d) {
  if (d.n_tasks <= 0 || d.n_edges < 0 || d.n_devices < 1 || !(d.horizon > 0.0)) {
    throw Error(ErrorCode::kConfigError, "problem dimensions must be positive");
  }
}

}  // namespace

BoundValue regret_bound(const ProblemDims& dims, double gamma) {
  check_dims(dims);
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorCode::kBadGamma, "gamma must be in (0,1)");
  const double value = kEMinus1 * gamma * dims.r_max + coupling(dims) * log_arms(dims) / gamma;
  return {value, second_moment_regime(dims)};
}

TunedBound tuned_bound(const ProblemDims& dims) {
  check_dims(dims);
  TunedBound c;
  c.gamma_star = std::min(1.0, std::sqrt(coupling(dims) * log_arms(dims) /
                                         (kEMinus1 * (dims.n_tasks + dims.n_edges) * dims.horizon)));
  const double n = dims.n_tasks;
  const double e = dims.n_edges;
  const double m = dims.n_devices;
  c.bound = 2.63 * std::sqrt((n + e) * (n + e * m) * m * n * dims.horizon * std::log(m));
  c.valid = second_moment_regime(dims);
  return c;
}

double learning_time(const ProblemDims& dims, double c) {
  check_dims(dims);
  if (!(c > 0.0)) throw Error(ErrorCode::kConfigError, "slope threshold must be positive");
  const double n = dims.n_tasks;
  const double e = dims.n_edges;
  const double m = dims.n_devices;
  return 1.73 / (c * c) * (n + e) * (n + e * m) * m * n * std::log(m);
}

double varying_gamma(const ProblemDims& dims, int t) {
  check_dims(dims);
  if (t < 1) throw Error(ErrorCode::kOutOfOrderFrame, "frames start at 1");
  return std::min(1.0, std::sqrt(coupling(dims) * log_arms(dims) /
                                 (kEMinus1 * (dims.n_tasks + dims.n_edges) * t)));
}

double coupled_alpha(const ProblemDims& dims, double gamma) { return gamma / coupling(dims); }

}  // namespace mabsta::bounds
