#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mabsta/config.hpp"
#include "mabsta/types.hpp"

namespace mabsta {

// Cumulative rewards of each agent against the best fixed assignment.
// CSV columns: t, opt_cum, then <agent>_cum, <agent>_regret, <agent>_ratio
// per agent, then bound (the tuned bound at horizon t).
struct RegretCurve {
  std::vector<std::string> agents;
  std::vector<double> opt_cum;           // per frame
  std::vector<std::vector<double>> cum;  // per agent, per frame
  std::vector<double> bound;             // per frame
  Assignment optimal;                    // best fixed assignment in hindsight
  double optimal_total = 0.0;

  std::size_t frames() const { return opt_cum.size(); }
  double regret(std::size_t agent, std::size_t k) const { return opt_cum[k] - cum[agent][k]; }
  // agent / optimal; 1 when the optimum has earned nothing yet.
  double ratio(std::size_t agent, std::size_t k) const;
  std::size_t agent_index(const std::string& name) const;
};

struct ExperimentResult {
  std::vector<RegretCurve> replicas;
  RegretCurve mean;  // entry-wise mean over replicas
};

// One replica: materializes the frames, computes the offline optimum on
// them, then runs every agent on the same frames.
RegretCurve run_replica(const ExperimentConfig& config, int replica);

// All replicas (concurrently), plus their mean. Writes <output> (the mean)
// and, with more than one replica, <stem>.r<k><ext> per replica.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Per-frame reward (sum over nodes and edges) of agents on the Markov swap
// scenario, with trailing rolling means. The configured agents run next to
// "post_swap_optimal", the best fixed assignment over frames after the swap.
struct AdaptivityCurve {
  std::vector<std::string> agents;
  std::vector<std::vector<double>> reward;   // per agent, per frame
  std::vector<std::vector<double>> rolling;  // mean of the last `window` frames (fewer at start)
  int window = 20;
  int swap_frame = 0;

  std::size_t agent_index(const std::string& name) const;
};

struct AdaptivityResult {
  std::vector<AdaptivityCurve> replicas;
  AdaptivityCurve mean;
};

AdaptivityCurve run_adaptivity_replica(const ExperimentConfig& config, int replica);
// Requires a markov env. Output files as in run_experiment.
AdaptivityResult adaptivity_experiment(const ExperimentConfig& config);

std::vector<double> rolling_mean(const std::vector<double>& values, int window);

void write_curve_csv(const RegretCurve& curve, std::ostream& out);
void write_curve_csv(const RegretCurve& curve, const std::string& path);
// Reads back the columns written by write_curve_csv. Throws IoError.
RegretCurve read_curve_csv(std::istream& in);
RegretCurve read_curve_csv(const std::string& path);

void write_adaptivity_csv(const AdaptivityCurve& curve, std::ostream& out);
void write_adaptivity_csv(const AdaptivityCurve& curve, const std::string& path);

// Writes `config.frames` frames of the configured environment (replica 0) as
// a trace CSV at `path`.
void gen_trace(const ExperimentConfig& config, const std::string& path);

// Output path of replica k given the configured one.
std::string replica_path(const std::string& path, int replica);

}  // namespace mabsta
