#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mabsta/baselines.hpp"
#include "mabsta/bounds.hpp"
#include "mabsta/config.hpp"
#include "mabsta/error.hpp"
#include "mabsta/harness.hpp"
#include "mabsta/trace_io.hpp"

using namespace mabsta;

namespace {

void print_summary(const RegretCurve& c) {
  const std::size_t last = c.frames() - 1;
  std::printf("frames %zu  opt_cum %.6g  bound %.6g\n", c.frames(), c.opt_cum[last], c.bound[last]);
  for (std::size_t a = 0; a < c.agents.size(); ++a) {
    std::printf("%-20s cum %-12.6g regret %-12.6g ratio %.4f\n", c.agents[a].c_str(),
                c.cum[a][last], c.regret(a, last), c.ratio(a, last));
  }
}

std::string one_based(const Assignment& x) {
  std::string s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(x[i] + 1);
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online task assignment on DAGs with bandit feedback"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output;

  auto* run = app.add_subcommand("run", "run the agents of a config; regret curves to CSV");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("-o,--output", output, "override the config's output path");

  auto* adapt = app.add_subcommand("adaptivity", "Markov swap experiment; rolling-mean rewards");
  adapt->add_option("config", config_path, "experiment config (JSON)")->required();
  adapt->add_option("-o,--output", output, "override the config's output path");

  int n = 0, e = 0, m = 0;
  double horizon = 0.0, slope = 0.05;
  auto* bound = app.add_subcommand("bound", "print gamma*, the regret bound and the learning time");
  bound->add_option("--n", n, "tasks")->required();
  bound->add_option("--e", e, "edges")->required();
  bound->add_option("--m", m, "devices")->required();
  bound->add_option("--t", horizon, "horizon")->required();
  bound->add_option("--c", slope, "slope threshold for the learning time");

  auto* gen = app.add_subcommand("gen-trace", "write the config's environment frames as a trace");
  gen->add_option("config", config_path, "experiment config (JSON)")->required();
  gen->add_option("-o,--output", output, "trace path (default: the config's output)");

  std::string trace_path, graph_path;
  auto* oracle = app.add_subcommand("oracle", "best fixed assignment of a trace");
  oracle->add_option("trace", trace_path, "trace CSV")->required();
  oracle->add_option("graph", graph_path, "graph JSON (or a config holding one)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ExperimentConfig cfg = load_config(config_path);
      if (!output.empty()) cfg.output = output;
      print_summary(run_experiment(cfg).mean);
    } else if (*adapt) {
      ExperimentConfig cfg = load_config(config_path);
      if (!output.empty()) cfg.output = output;
      const AdaptivityCurve c = adaptivity_experiment(cfg).mean;
      const std::size_t last = c.reward.front().size() - 1;
      for (std::size_t a = 0; a < c.agents.size(); ++a) {
        std::printf("%-20s final rolling mean %.6g\n", c.agents[a].c_str(), c.rolling[a][last]);
      }
    } else if (*bound) {
      const bounds::ProblemDims dims{n, e, m, horizon, static_cast<double>(n + e) * horizon};
      const bounds::TunedBound c = bounds::tuned_bound(dims);
      std::printf("gamma_star %.10g\nbound %.10g\nlearning_time %.10g\n", c.gamma_star, c.bound,
                  bounds::learning_time(dims, slope));
      if (!c.valid) std::printf("warning: bound derived for M >= 3 and |E| >= 3\n");
    } else if (*gen) {
      const ExperimentConfig cfg = load_config(config_path);
      const std::string path = output.empty() ? cfg.output : output;
      if (path.empty()) throw Error(ErrorCode::kConfigError, "no output path");
      gen_trace(cfg, path);
    } else if (*oracle) {
      const TaskGraph graph = load_graph_spec(graph_path).build();
      int devices = 0;
      const auto frames = read_trace(trace_path, graph, &devices);
      const OptimalAssignment opt = offline_optimal(frames, graph, devices);
      std::printf("assignment %s\ntotal %s\n", one_based(opt.x).c_str(),
                  format_double(opt.total).c_str());
    }
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
