#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mabsta/agent.hpp"
#include "mabsta/baselines.hpp"
#include "mabsta/env.hpp"
#include "mabsta/graph.hpp"

namespace mabsta {

// Task graph as written in config files: 1-based task ids.
struct GraphSpec {
  int n_tasks = 0;
  std::vector<std::pair<int, int>> edges;
  int root = 0;  // 0 = the unique sink

  TaskGraph build() const;
  static GraphSpec chain(int n_tasks);
};

enum class EnvKind { kConstant, kUniform, kSwitching, kTrace, kMarkov, kReplay };

struct EnvSpec {
  EnvKind kind = EnvKind::kUniform;
  std::uint64_t seed = 0;
  double constant = 0.5;
  SwitchingParams switching;
  double link_sigma = 0.3;
  double us_per_iteration = 1.0;
  std::optional<std::uint64_t> link_seed;  // link means; defaults to `seed`
  MarkovParams markov = default_markov_params();
  std::string replay_path;
};

enum class AgentKind { kMabsta, kMabstaNaive, kExp3, kRandom, kMyopic, kOptimal };

struct AgentSpec {
  std::string name;
  AgentKind kind = AgentKind::kMabsta;
  // MABSTA: unset gamma means the tuned gamma for the run's horizon.
  std::optional<double> gamma;
  std::optional<double> alpha;
  GammaMode gamma_mode = GammaMode::kFixed;
  bool check_bounds = false;
  std::uint64_t seed = 0;
  // Myopic: matrices the policy believes in; unset takes the env's pre-swap ones.
  std::vector<Transition> transitions;
};

struct ExperimentConfig {
  GraphSpec graph;
  int n_devices = 2;
  int frames = 1;
  EnvSpec env;
  std::vector<AgentSpec> agents;
  std::string output;  // CSV path; empty = no file
  int replicas = 1;
  int window = 20;     // rolling-mean window of the adaptivity experiment
};

// Parses the JSON document. Throws ConfigError naming the offending key.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
// A graph document on its own, or the "graph" entry of a full config.
GraphSpec load_graph_spec(const std::string& path);

std::string to_string(EnvKind kind);
std::string to_string(AgentKind kind);

// Seeds of replica r; replica streams are derived, never reused.
std::uint64_t replica_seed(std::uint64_t seed, int replica);

std::unique_ptr<Environment> make_environment(const EnvSpec& spec, const TaskGraph& graph,
                                              int n_devices, int replica);

// `optimal` is the fixed assignment replayed by kOptimal agents.
std::unique_ptr<Policy> make_policy(const AgentSpec& spec, const ExperimentConfig& config,
                                    const TaskGraph& graph, const Assignment& optimal,
                                    int replica);

}  // namespace mabsta
