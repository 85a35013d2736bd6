#include "mabsta/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mabsta/bounds.hpp"
#include "mabsta/error.hpp"
#include "mabsta/trace_io.hpp"

namespace mabsta {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::kConfigError, what); }

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) fail(where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) fail("unknown key '" + k + "' in " + where);
  }
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) fail("missing '" + std::string(key) + "' in " + where);
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail("bad value for '" + std::string(key) + "' in " + where);
  }
}

template <typename T>
T get_or(const json& obj, const char* key, const std::string& where, T fallback) {
  return obj.contains(key) ? get<T>(obj, key, where) : fallback;
}

std::vector<Transition> parse_transitions(const json& v, const std::string& where) {
  std::vector<Transition> out;
  try {
    for (const json& m : v) {
      Transition p{};
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) p[a][b] = m.at(a).at(b).get<double>();
      }
      for (int a = 0; a < 2; ++a) {
        if (p[a][0] < 0.0 || p[a][1] < 0.0 || std::abs(p[a][0] + p[a][1] - 1.0) > 1e-9) {
          fail("transition rows must be probability vectors in " + where);
        }
      }
      out.push_back(p);
    }
  } catch (const json::exception&) {
    fail("transitions in " + where + " must be 2x2 matrices");
  }
  return out;
}

GraphSpec parse_graph(const json& g) {
  if (g.contains("chain")) {
    only_keys(g, "graph", {"chain"});
    return GraphSpec::chain(get<int>(g, "chain", "graph"));
  }
  only_keys(g, "graph", {"n_tasks", "edges", "root"});
  GraphSpec spec;
  spec.n_tasks = get<int>(g, "n_tasks", "graph");
  spec.edges = get_or<std::vector<std::pair<int, int>>>(g, "edges", "graph", {});
  spec.root = get_or<int>(g, "root", "graph", 0);
  return spec;
}

EnvKind parse_env_kind(const std::string& s) {
  if (s == "constant") return EnvKind::kConstant;
  if (s == "uniform") return EnvKind::kUniform;
  if (s == "switching") return EnvKind::kSwitching;
  if (s == "trace") return EnvKind::kTrace;
  if (s == "markov") return EnvKind::kMarkov;
  if (s == "replay") return EnvKind::kReplay;
  fail("unknown env kind '" + s + "'");
}

AgentKind parse_agent_kind(const std::string& s) {
  if (s == "mabsta") return AgentKind::kMabsta;
  if (s == "mabsta_naive") return AgentKind::kMabstaNaive;
  if (s == "exp3") return AgentKind::kExp3;
  if (s == "random") return AgentKind::kRandom;
  if (s == "myopic") return AgentKind::kMyopic;
  if (s == "optimal") return AgentKind::kOptimal;
  fail("unknown agent kind '" + s + "'");
}

EnvSpec parse_env(const json& e) {
  only_keys(e, "env",
            {"kind", "seed", "value", "period", "doubling", "high", "low", "noise", "link_sigma",
             "us_per_iteration", "link_seed", "transitions", "good_reward", "bad_reward",
             "edge_reward", "swap_frame", "path"});
  EnvSpec spec;
  spec.kind = parse_env_kind(get<std::string>(e, "kind", "env"));
  spec.seed = get_or<std::uint64_t>(e, "seed", "env", 0);
  spec.constant = get_or(e, "value", "env", spec.constant);
  auto& sw = spec.switching;
  sw.period = get_or(e, "period", "env", sw.period);
  sw.doubling = get_or(e, "doubling", "env", sw.doubling);
  sw.high = get_or(e, "high", "env", sw.high);
  sw.low = get_or(e, "low", "env", sw.low);
  sw.noise = get_or(e, "noise", "env", sw.noise);
  spec.link_sigma = get_or(e, "link_sigma", "env", spec.link_sigma);
  spec.us_per_iteration = get_or(e, "us_per_iteration", "env", spec.us_per_iteration);
  if (e.contains("link_seed")) spec.link_seed = get<std::uint64_t>(e, "link_seed", "env");
  auto& mk = spec.markov;
  if (e.contains("transitions")) mk.transitions = parse_transitions(e.at("transitions"), "env");
  mk.good_reward = get_or(e, "good_reward", "env", mk.good_reward);
  mk.bad_reward = get_or(e, "bad_reward", "env", mk.bad_reward);
  mk.edge_reward = get_or(e, "edge_reward", "env", mk.edge_reward);
  mk.swap_frame = get_or(e, "swap_frame", "env", mk.swap_frame);
  spec.replay_path = get_or<std::string>(e, "path", "env", "");
  if (spec.kind == EnvKind::kReplay && spec.replay_path.empty()) fail("replay env needs 'path'");
  return spec;
}

AgentSpec parse_agent(const json& a, std::size_t index) {
  const std::string where = "agents[" + std::to_string(index) + "]";
  only_keys(a, where,
            {"name", "kind", "gamma", "alpha", "gamma_mode", "check_bounds", "seed", "transitions"});
  AgentSpec spec;
  const std::string kind = get<std::string>(a, "kind", where);
  spec.kind = parse_agent_kind(kind);
  spec.name = get_or<std::string>(a, "name", where, kind);
  if (a.contains("gamma")) spec.gamma = get<double>(a, "gamma", where);
  if (a.contains("alpha")) spec.alpha = get<double>(a, "alpha", where);
  const std::string mode = get_or<std::string>(a, "gamma_mode", where, "fixed");
  if (mode == "fixed") {
    spec.gamma_mode = GammaMode::kFixed;
  } else if (mode == "varying") {
    spec.gamma_mode = GammaMode::kVarying;
  } else {
    fail("gamma_mode must be 'fixed' or 'varying' in " + where);
  }
  spec.check_bounds = get_or(a, "check_bounds", where, false);
  spec.seed = get_or<std::uint64_t>(a, "seed", where, index + 1);
  if (a.contains("transitions")) spec.transitions = parse_transitions(a.at("transitions"), where);
  return spec;
}

bool is_name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c == '-';
}

}  // namespace

TaskGraph GraphSpec::build() const {
  if (n_tasks < 1) fail("graph needs at least one task");
  int r = root;
  if (r == 0) {
    std::vector<bool> has_out(n_tasks + 1, false);
    for (const auto& [from, to] : edges) {
      if (from >= 1 && from <= n_tasks) has_out[from] = true;
    }
    for (int v = 1; v <= n_tasks; ++v) {
      if (!has_out[v]) {
        if (r != 0) fail("graph has several sinks; set 'root'");
        r = v;
      }
    }
    if (r == 0) fail("graph has no sink");
  }
  return TaskGraph::from_one_based(n_tasks, edges, r);
}

GraphSpec GraphSpec::chain(int n_tasks) {
  GraphSpec g;
  g.n_tasks = n_tasks;
  for (int v = 1; v < n_tasks; ++v) g.edges.emplace_back(v, v + 1);
  g.root = n_tasks;
  return g;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
  only_keys(doc, "config",
            {"graph", "devices", "frames", "env", "agents", "output", "replicas", "window"});
  ExperimentConfig cfg;
  if (!doc.contains("graph")) fail("missing 'graph' in config");
  cfg.graph = parse_graph(doc.at("graph"));
  cfg.n_devices = get<int>(doc, "devices", "config");
  cfg.frames = get<int>(doc, "frames", "config");
  if (!doc.contains("env")) fail("missing 'env' in config");
  cfg.env = parse_env(doc.at("env"));
  if (!doc.contains("agents") || !doc.at("agents").is_array()) fail("'agents' must be a list");
  for (std::size_t k = 0; k < doc.at("agents").size(); ++k) {
    cfg.agents.push_back(parse_agent(doc.at("agents").at(k), k));
  }
  cfg.output = get_or<std::string>(doc, "output", "config", "");
  cfg.replicas = get_or(doc, "replicas", "config", 1);
  cfg.window = get_or(doc, "window", "config", 20);

  if (cfg.n_devices < 1) fail("'devices' must be positive");
  if (cfg.frames < 1) fail("'frames' must be at least 1");
  if (cfg.replicas < 1) fail("'replicas' must be at least 1");
  if (cfg.window < 1) fail("'window' must be at least 1");
  if (cfg.agents.empty()) fail("at least one agent is required");
  std::set<std::string> names;
  for (const AgentSpec& a : cfg.agents) {
    if (a.name.empty() || !std::all_of(a.name.begin(), a.name.end(), is_name_char)) {
      fail("agent names may use letters, digits, '_' and '-' only");
    }
    if (!names.insert(a.name).second) fail("duplicate agent name '" + a.name + "'");
  }
  if (cfg.env.kind == EnvKind::kMarkov &&
      static_cast<int>(cfg.env.markov.transitions.size()) != cfg.n_devices) {
    fail("markov env needs one transition matrix per device");
  }
  if (cfg.env.kind == EnvKind::kTrace &&
      cfg.n_devices > static_cast<int>(kMeasuredDevices.size())) {
    fail("trace env supports at most " + std::to_string(kMeasuredDevices.size()) + " devices");
  }
  // Graph errors surface here rather than mid-run.
  cfg.graph.build();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

GraphSpec load_graph_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
  GraphSpec spec = parse_graph(doc.contains("graph") ? doc.at("graph") : doc);
  spec.build();
  return spec;
}

std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::kConstant: return "constant";
    case EnvKind::kUniform: return "uniform";
    case EnvKind::kSwitching: return "switching";
    case EnvKind::kTrace: return "trace";
    case EnvKind::kMarkov: return "markov";
    case EnvKind::kReplay: return "replay";
  }
  return "?";
}

std::string to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::kMabsta: return "mabsta";
    case AgentKind::kMabstaNaive: return "mabsta_naive";
    case AgentKind::kExp3: return "exp3";
    case AgentKind::kRandom: return "random";
    case AgentKind::kMyopic: return "myopic";
    case AgentKind::kOptimal: return "optimal";
  }
  return "?";
}

std::uint64_t replica_seed(std::uint64_t seed, int replica) {
  return derive_seed(seed, static_cast<std::uint64_t>(replica));
}

std::unique_ptr<Environment> make_environment(const EnvSpec& spec, const TaskGraph& graph,
                                              int n_devices, int replica) {
  const std::uint64_t seed = replica_seed(spec.seed, replica);
  switch (spec.kind) {
    case EnvKind::kConstant:
      return std::make_unique<ConstantEnv>(graph, n_devices, spec.constant);
    case EnvKind::kUniform:
      return std::make_unique<UniformEnv>(graph, n_devices, seed);
    case EnvKind::kSwitching:
      return std::make_unique<SwitchingEnv>(graph, n_devices, spec.switching, seed);
    case EnvKind::kTrace: {
      // Link means are a property of the network, shared by all replicas.
      TraceDeviceModel model = default_trace_model(n_devices, spec.link_seed.value_or(spec.seed));
      model.link_sigma = spec.link_sigma;
      model.us_per_iteration = spec.us_per_iteration;
      return std::make_unique<TraceEnv>(graph, std::move(model), seed);
    }
    case EnvKind::kMarkov:
      return std::make_unique<MarkovSwapEnv>(graph, spec.markov, seed);
    case EnvKind::kReplay: {
      int m = 0;
      auto frames = read_trace(spec.replay_path, graph, &m);
      if (m != n_devices) {
        throw Error(ErrorCode::kDimensionMismatch, "trace device count differs from config");
      }
      return std::make_unique<ReplayEnv>(graph, n_devices, std::move(frames));
    }
  }
  fail("unknown env kind");
}

std::unique_ptr<Policy> make_policy(const AgentSpec& spec, const ExperimentConfig& config,
                                    const TaskGraph& graph, const Assignment& optimal,
                                    int replica) {
  const int m = config.n_devices;
  const std::uint64_t seed = replica_seed(spec.seed, replica);
  switch (spec.kind) {
    case AgentKind::kMabsta:
    case AgentKind::kMabstaNaive: {
      AgentParams p;
      p.gamma_mode = spec.gamma_mode;
      p.alpha = spec.alpha;
      p.check_bounds = spec.check_bounds;
      p.seed = seed;
      if (spec.gamma) {
        p.gamma = *spec.gamma;
      } else if (spec.gamma_mode == GammaMode::kFixed) {
        bounds::ProblemDims dims{graph.n_tasks(), static_cast<int>(graph.n_edges()), m,
                                 static_cast<double>(config.frames), 1.0};
        p.gamma = m > 1 ? bounds::tuned_bound(dims).gamma_star : 1.0;
      } else {
        p.gamma = 1.0;  // unused by the schedule
      }
      if (spec.kind == AgentKind::kMabsta) return std::make_unique<MabstaAgent>(graph, m, p);
      return std::make_unique<NaiveMabstaAgent>(graph, m, p);
    }
    case AgentKind::kExp3: {
      Exp3Params p;
      p.horizon = config.frames;
      p.gamma = spec.gamma;
      p.seed = seed;
      return std::make_unique<Exp3Flat>(graph, m, p);
    }
    case AgentKind::kRandom:
      return std::make_unique<UniformRandom>(graph, m, seed);
    case AgentKind::kMyopic: {
      std::vector<Transition> tr = spec.transitions;
      if (tr.empty()) {
        if (config.env.kind != EnvKind::kMarkov) fail("myopic agent needs 'transitions'");
        tr = config.env.markov.transitions;
      }
      if (static_cast<int>(tr.size()) != m) fail("myopic agent needs one matrix per device");
      return std::make_unique<MyopicMarkov>(graph, std::move(tr));
    }
    case AgentKind::kOptimal:
      return std::make_unique<FixedPolicy>(optimal);
  }
  fail("unknown agent kind");
}

}  // namespace mabsta
