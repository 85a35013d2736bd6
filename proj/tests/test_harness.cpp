#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mabsta/error.hpp"
#include "mabsta/harness.hpp"
#include "mabsta/trace_io.hpp"

using namespace mabsta;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mabsta_test_harness";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* kUniformConfig = R"({
  "graph": {"chain": 4},
  "devices": 3,
  "frames": 300,
  "env": {"kind": "uniform", "seed": 11},
  "agents": [
    {"kind": "optimal"},
    {"kind": "random"},
    {"kind": "mabsta", "gamma": 0.2},
    {"kind": "exp3"}
  ]
})";

}  // namespace

TEST_CASE("replaying the optimum has zero regret") {
  const ExperimentConfig cfg = parse_config(kUniformConfig);
  const RegretCurve c = run_replica(cfg, 0);
  REQUIRE(c.frames() == 300);
  const std::size_t opt = c.agent_index("optimal");
  for (std::size_t k = 0; k < c.frames(); ++k) CHECK(c.regret(opt, k) == 0.0);
  CHECK(c.opt_cum.back() == doctest::Approx(c.optimal_total));
  CHECK(c.bound.back() > 0.0);
  CHECK_THROWS_AS(c.agent_index("nobody"), Error);
}

TEST_CASE("constant rewards: every agent matches the optimum") {
  ExperimentConfig cfg = parse_config(kUniformConfig);
  cfg.env.kind = EnvKind::kConstant;
  cfg.env.constant = 0.25;
  const RegretCurve c = run_replica(cfg, 0);
  for (std::size_t k = 0; k < c.frames(); ++k) {
    CHECK(c.opt_cum[k] == doctest::Approx(0.25 * 7 * (k + 1)));
    for (std::size_t a = 0; a < c.agents.size(); ++a) {
      CHECK(std::abs(c.regret(a, k)) < 1e-9);
      CHECK(c.ratio(a, k) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("runs are reproducible byte for byte") {
  ExperimentConfig cfg = parse_config(kUniformConfig);
  cfg.replicas = 3;
  cfg.output = scratch("curve_a.csv").string();
  const ExperimentResult a = run_experiment(cfg);
  cfg.output = scratch("curve_b.csv").string();
  const ExperimentResult b = run_experiment(cfg);
  CHECK(slurp(scratch("curve_a.csv")) == slurp(scratch("curve_b.csv")));
  for (int r = 0; r < 3; ++r) {
    CHECK(slurp(replica_path(scratch("curve_a.csv").string(), r)) ==
          slurp(replica_path(scratch("curve_b.csv").string(), r)));
  }
  CHECK(replica_path("out/x.csv", 2) == "out/x.r2.csv");
  // Replicas differ from each other.
  CHECK(a.replicas[0].opt_cum.back() != a.replicas[1].opt_cum.back());
  // The mean is the entry-wise mean.
  const std::size_t k = 150;
  double m = 0.0;
  for (const auto& r : a.replicas) m += r.cum[1][k];
  CHECK(a.mean.cum[1][k] == doctest::Approx(m / 3).epsilon(1e-14));
}

TEST_CASE("curve CSV round trip") {
  const RegretCurve c = run_replica(parse_config(kUniformConfig), 0);
  std::stringstream s;
  write_curve_csv(c, s);
  const std::string text = s.str();
  CHECK(text.rfind("t,opt_cum,optimal_cum,optimal_regret,optimal_ratio,random_cum,", 0) == 0);
  const RegretCurve back = read_curve_csv(s);
  CHECK(back.agents == c.agents);
  CHECK(back.opt_cum == c.opt_cum);
  CHECK(back.cum == c.cum);
  CHECK(back.bound == c.bound);

  RegretCurve empty;
  empty.agents = {"a"};
  empty.cum.resize(1);
  std::stringstream e;
  write_curve_csv(empty, e);
  CHECK(e.str() == "t,opt_cum,a_cum,a_regret,a_ratio,bound\n");
  std::istringstream bad("t,opt_cum\n1,x\n");
  CHECK_THROWS_AS(read_curve_csv(bad), Error);
}

TEST_CASE("generated traces replay identically") {
  ExperimentConfig cfg = parse_config(R"({
    "graph": {"n_tasks": 4, "edges": [[1, 3], [2, 3], [3, 4]]},
    "devices": 3,
    "frames": 40,
    "env": {"kind": "trace", "seed": 5},
    "agents": [{"kind": "random"}]
  })");
  const fs::path p = scratch("trace.csv");
  gen_trace(cfg, p.string());
  const TableFile file = read_tables_csv(p.string());
  CHECK(file.rows.size() == 40);
  CHECK(file.t.front() == 1);
  CHECK(file.t.back() == 40);

  const TaskGraph g = cfg.graph.build();
  auto env = make_environment(cfg.env, g, 3, 0);
  const auto direct = materialize(*env, 40);
  CHECK(direct == file.rows);

  cfg.env.kind = EnvKind::kReplay;
  cfg.env.replay_path = p.string();
  auto replay = make_environment(cfg.env, g, 3, 0);
  CHECK(materialize(*replay, 40) == direct);
  CHECK_THROWS_AS(replay->next_frame(41), Error);
}

TEST_CASE("config errors name the problem") {
  CHECK_THROWS_AS(parse_config("{"), Error);
  CHECK_THROWS_AS(parse_config(R"({"graph": {"chain": 2}, "devices": 2, "frames": 3,
      "env": {"kind": "uniform", "bogus": 1}, "agents": []})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"graph": {"chain": 2}, "devices": 2, "frames": 3,
      "env": {"kind": "weird"}, "agents": []})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"graph": {"chain": 2}, "devices": 2, "frames": 3,
      "env": {"kind": "uniform"}, "agents": [{"kind": "random"}, {"kind": "random"}]})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"graph": {"n_tasks": 2, "edges": [[1, 3]]}, "devices": 2,
      "frames": 3, "env": {"kind": "uniform"}, "agents": []})")
                      .graph.build(),
                  Error);
  try {
    parse_config(R"({"graph": {"chain": 2}, "devices": 2, "frames": 3, "env": {"kind": "uniform"},
        "agents": [{"kind": "mabsta", "gamma_mode": "sometimes"}]})");
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfigError);
    CHECK(std::string(e.what()).find("gamma_mode") != std::string::npos);
  }
}

TEST_CASE("rolling mean") {
  const std::vector<double> v = {1, 2, 3, 4, 5, 6};
  const auto r = rolling_mean(v, 3);
  CHECK(r[0] == doctest::Approx(1.0));
  CHECK(r[1] == doctest::Approx(1.5));
  CHECK(r[2] == doctest::Approx(2.0));
  CHECK(r[5] == doctest::Approx(5.0));
  CHECK(rolling_mean({}, 4).empty());
  CHECK_THROWS_AS(rolling_mean(v, 0), Error);
}

TEST_CASE("adaptivity curves") {
  const ExperimentConfig cfg = parse_config(R"({
    "graph": {"chain": 3},
    "devices": 2,
    "frames": 60,
    "env": {"kind": "markov", "seed": 2, "swap_frame": 30},
    "agents": [{"kind": "myopic"}, {"kind": "mabsta", "gamma": 0.1, "alpha": 0.1}],
    "window": 10
  })");
  const AdaptivityCurve c = run_adaptivity_replica(cfg, 0);
  CHECK(c.agents.back() == "post_swap_optimal");
  CHECK(c.swap_frame == 30);
  for (const auto& r : c.reward) {
    REQUIRE(r.size() == 60);
    for (double v : r) CHECK((v >= 0.3 - 1e-12 && v <= 2.7 + 1e-12));
  }
  CHECK(c.rolling[0] == rolling_mean(c.reward[0], 10));
  ExperimentConfig wrong = cfg;
  wrong.env.kind = EnvKind::kUniform;
  CHECK_THROWS_AS(run_adaptivity_replica(wrong, 0), Error);
}
