#include "mabsta/harness.hpp"

#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mabsta/baselines.hpp"
#include "mabsta/bounds.hpp"
#include "mabsta/env.hpp"
#include "mabsta/error.hpp"
#include "mabsta/trace_io.hpp"

namespace mabsta {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> agent_names(const ExperimentConfig& config) {
  std::vector<std::string> names;
  for (const AgentSpec& a : config.agents) names.push_back(a.name);
  return names;
}

void add_into(std::vector<double>& acc, const std::vector<double>& v) {
  for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += v[k];
}

void scale(std::vector<double>& v, double s) {
  for (double& x : v) x *= s;
}

// Runs `body(r)` for every replica on the OpenMP team and rethrows the first
// failure after the join.
template <typename Body>
void for_replicas(int n, Body body) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < n; ++r) {
    try {
      body(r);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

double RegretCurve::ratio(std::size_t agent, std::size_t k) const {
  return opt_cum[k] > 0.0 ? cum[agent][k] / opt_cum[k] : 1.0;
}

std::size_t RegretCurve::agent_index(const std::string& name) const {
  for (std::size_t a = 0; a < agents.size(); ++a) {
    if (agents[a] == name) return a;
  }
  throw Error(ErrorCode::kConfigError, "no agent named '" + name + "'");
}

std::size_t AdaptivityCurve::agent_index(const std::string& name) const {
  for (std::size_t a = 0; a < agents.size(); ++a) {
    if (agents[a] == name) return a;
  }
  throw Error(ErrorCode::kConfigError, "no agent named '" + name + "'");
}

std::string replica_path(const std::string& path, int replica) {
  const std::filesystem::path p(path);
  std::filesystem::path out = p.parent_path() / p.stem();
  out += ".r" + std::to_string(replica);
  out += p.extension();
  return out.string();
}

RegretCurve run_replica(const ExperimentConfig& config, int replica) {
  const TaskGraph graph = config.graph.build();
  const int m = config.n_devices;
  const int n_frames = config.frames;
  auto env = make_environment(config.env, graph, m, replica);
  const std::vector<FrameRewards> frames = materialize(*env, n_frames);
  const OptimalAssignment opt = offline_optimal(frames, graph, m);

  RegretCurve curve;
  curve.agents = agent_names(config);
  curve.optimal = opt.x;
  curve.optimal_total = opt.total;
  curve.opt_cum.resize(n_frames);
  curve.bound.resize(n_frames);
  bounds::ProblemDims dims{graph.n_tasks(), static_cast<int>(graph.n_edges()), m, 1.0, 1.0};
  double acc = 0.0;
  for (int k = 0; k < n_frames; ++k) {
    acc += assignment_reward(frames[k], graph, opt.x);
    curve.opt_cum[k] = acc;
    dims.horizon = k + 1;
    curve.bound[k] = bounds::tuned_bound(dims).bound;
  }

  for (const AgentSpec& spec : config.agents) {
    auto policy = make_policy(spec, config, graph, opt.x, replica);
    std::vector<double> cum(n_frames);
    double total = 0.0;
    for (int t = 1; t <= n_frames; ++t) {
      const Assignment x = policy->choose(t);
      const BanditFeedback fb = feedback_for(frames[t - 1], graph, x);
      policy->observe(x, fb, t);
      total += fb.total();
      cum[t - 1] = total;
    }
    curve.cum.push_back(std::move(cum));
  }
  return curve;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentResult result;
  result.replicas.resize(config.replicas);
  for_replicas(config.replicas, [&](int r) { result.replicas[r] = run_replica(config, r); });

  RegretCurve& mean = result.mean;
  const RegretCurve& first = result.replicas.front();
  mean.agents = first.agents;
  mean.bound = first.bound;
  mean.opt_cum.assign(first.frames(), 0.0);
  mean.cum.assign(first.agents.size(), std::vector<double>(first.frames(), 0.0));
  for (const RegretCurve& c : result.replicas) {
    add_into(mean.opt_cum, c.opt_cum);
    for (std::size_t a = 0; a < c.agents.size(); ++a) add_into(mean.cum[a], c.cum[a]);
    mean.optimal_total += c.optimal_total;
  }
  const double inv = 1.0 / config.replicas;
  scale(mean.opt_cum, inv);
  for (auto& c : mean.cum) scale(c, inv);
  mean.optimal_total *= inv;
  if (config.replicas == 1) mean.optimal = first.optimal;

  if (!config.output.empty()) {
    write_curve_csv(mean, config.output);
    if (config.replicas > 1) {
      for (int r = 0; r < config.replicas; ++r) {
        write_curve_csv(result.replicas[r], replica_path(config.output, r));
      }
    }
  }
  return result;
}

std::vector<double> rolling_mean(const std::vector<double>& values, int window) {
  if (window < 1) throw Error(ErrorCode::kConfigError, "window must be positive");
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    sum += values[k];
    if (k >= static_cast<std::size_t>(window)) sum -= values[k - window];
    const std::size_t n = std::min<std::size_t>(k + 1, window);
    out[k] = sum / static_cast<double>(n);
  }
  return out;
}

AdaptivityCurve run_adaptivity_replica(const ExperimentConfig& config, int replica) {
  if (config.env.kind != EnvKind::kMarkov) {
    throw Error(ErrorCode::kConfigError, "adaptivity needs a markov env");
  }
  const TaskGraph graph = config.graph.build();
  const int m = config.n_devices;
  const int n_frames = config.frames;
  auto env = make_environment(config.env, graph, m, replica);
  const std::vector<FrameRewards> frames = materialize(*env, n_frames);

  const int swap = config.env.markov.swap_frame;
  std::vector<FrameRewards> after;
  if (swap > 0 && swap < n_frames) {
    after.assign(frames.begin() + swap, frames.end());
  } else {
    after = frames;
  }
  const OptimalAssignment post = offline_optimal(after, graph, m);

  AdaptivityCurve curve;
  curve.window = config.window;
  curve.swap_frame = swap;
  curve.agents = agent_names(config);
  curve.agents.push_back("post_swap_optimal");

  for (std::size_t a = 0; a < curve.agents.size(); ++a) {
    std::unique_ptr<Policy> policy;
    if (a < config.agents.size()) {
      policy = make_policy(config.agents[a], config, graph, post.x, replica);
    } else {
      policy = std::make_unique<FixedPolicy>(post.x);
    }
    std::vector<double> reward(n_frames);
    for (int t = 1; t <= n_frames; ++t) {
      const Assignment x = policy->choose(t);
      const BanditFeedback fb = feedback_for(frames[t - 1], graph, x);
      policy->observe(x, fb, t);
      reward[t - 1] = fb.total();
    }
    curve.rolling.push_back(rolling_mean(reward, config.window));
    curve.reward.push_back(std::move(reward));
  }
  return curve;
}

AdaptivityResult adaptivity_experiment(const ExperimentConfig& config) {
  AdaptivityResult result;
  result.replicas.resize(config.replicas);
  for_replicas(config.replicas,
               [&](int r) { result.replicas[r] = run_adaptivity_replica(config, r); });

  const AdaptivityCurve& first = result.replicas.front();
  AdaptivityCurve& mean = result.mean;
  mean.agents = first.agents;
  mean.window = first.window;
  mean.swap_frame = first.swap_frame;
  const std::size_t n = first.reward.front().size();
  mean.reward.assign(first.agents.size(), std::vector<double>(n, 0.0));
  for (const AdaptivityCurve& c : result.replicas) {
    for (std::size_t a = 0; a < c.agents.size(); ++a) add_into(mean.reward[a], c.reward[a]);
  }
  for (auto& r : mean.reward) {
    scale(r, 1.0 / config.replicas);
    mean.rolling.push_back(rolling_mean(r, config.window));
  }

  if (!config.output.empty()) {
    write_adaptivity_csv(mean, config.output);
    if (config.replicas > 1) {
      for (int r = 0; r < config.replicas; ++r) {
        write_adaptivity_csv(result.replicas[r], replica_path(config.output, r));
      }
    }
  }
  return result;
}

void write_curve_csv(const RegretCurve& curve, std::ostream& out) {
  out << "t,opt_cum";
  for (const std::string& a : curve.agents) out << ',' << a << "_cum," << a << "_regret," << a << "_ratio";
  out << ",bound\n";
  for (std::size_t k = 0; k < curve.frames(); ++k) {
    out << (k + 1) << ',' << format_double(curve.opt_cum[k]);
    for (std::size_t a = 0; a < curve.agents.size(); ++a) {
      out << ',' << format_double(curve.cum[a][k]) << ',' << format_double(curve.regret(a, k))
          << ',' << format_double(curve.ratio(a, k));
    }
    out << ',' << format_double(curve.bound[k]) << '\n';
  }
}

void write_curve_csv(const RegretCurve& curve, const std::string& path) {
  auto out = open_out(path);
  write_curve_csv(curve, out);
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

RegretCurve read_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kIoError, "empty curve file");
  const std::vector<std::string> header = split(line, ',');
  if (header.size() < 3 || (header.size() - 3) % 3 != 0 || header[0] != "t" ||
      header[1] != "opt_cum" || header.back() != "bound") {
    throw Error(ErrorCode::kIoError, "unexpected curve header");
  }
  RegretCurve curve;
  const std::size_t n_agents = (header.size() - 3) / 3;
  for (std::size_t a = 0; a < n_agents; ++a) {
    const std::string& c = header[2 + 3 * a];
    const std::string suffix = "_cum";
    if (c.size() <= suffix.size() || c.compare(c.size() - suffix.size(), suffix.size(), suffix) != 0) {
      throw Error(ErrorCode::kIoError, "unexpected curve column " + c);
    }
    const std::string name = c.substr(0, c.size() - suffix.size());
    if (header[3 + 3 * a] != name + "_regret" || header[4 + 3 * a] != name + "_ratio") {
      throw Error(ErrorCode::kIoError, "unexpected curve columns for " + name);
    }
    curve.agents.push_back(name);
  }
  curve.cum.resize(n_agents);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line, ',');
    if (cells.size() != header.size()) throw Error(ErrorCode::kIoError, "ragged curve row");
    ++row;
    if (cells[0] != std::to_string(row)) throw Error(ErrorCode::kIoError, "curve rows out of order");
    curve.opt_cum.push_back(parse_double(cells[1]));
    for (std::size_t a = 0; a < n_agents; ++a) curve.cum[a].push_back(parse_double(cells[2 + 3 * a]));
    curve.bound.push_back(parse_double(cells.back()));
  }
  return curve;
}

RegretCurve read_curve_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  return read_curve_csv(in);
}

void write_adaptivity_csv(const AdaptivityCurve& curve, std::ostream& out) {
  out << 't';
  for (const std::string& a : curve.agents) out << ',' << a << "_reward," << a << "_rolling";
  out << '\n';
  const std::size_t n = curve.reward.empty() ? 0 : curve.reward.front().size();
  for (std::size_t k = 0; k < n; ++k) {
    out << (k + 1);
    for (std::size_t a = 0; a < curve.agents.size(); ++a) {
      out << ',' << format_double(curve.reward[a][k]) << ',' << format_double(curve.rolling[a][k]);
    }
    out << '\n';
  }
}

void write_adaptivity_csv(const AdaptivityCurve& curve, const std::string& path) {
  auto out = open_out(path);
  write_adaptivity_csv(curve, out);
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

void gen_trace(const ExperimentConfig& config, const std::string& path) {
  const TaskGraph graph = config.graph.build();
  auto env = make_environment(config.env, graph, config.n_devices, 0);
  write_tables_csv(path, graph, config.n_devices, materialize(*env, config.frames));
}

}  // namespace mabsta
