#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "uavrelay/harness.hpp"

using namespace uavrelay;

namespace {

std::vector<ResultRow> strip_seconds(std::vector<ResultRow> rows) {
  for (auto& r : rows) r.seconds = 0.0;
  return rows;
}

double mean_of(const std::vector<ResultRow>& rows, const std::string& scenario,
               const std::string& policy, const std::string& metric) {
  for (const auto& r : rows)
    if (r.scenario == scenario && r.policy == policy && r.metric == metric)
      return r.mean;
  REQUIRE(false);
  return 0.0;
}

}  // namespace

TEST_CASE("presets match their published settings") {
  const auto small = preset("small-ideal");
  REQUIRE(small.scenarios.size() == 1);
  const auto& cfg = small.scenarios[0].config;
  CHECK(cfg.num_devices == 12);
  CHECK(cfg.num_uavs == 2);
  CHECK(cfg.sample_channels == 1);
  CHECK(cfg.update_channels == 1);
  CHECK(cfg.horizon == 10);
  CHECK(cfg.traffic == TrafficModel::GenerateAtWill);
  CHECK(cfg.lossless());
  CHECK(small.n_runs == 10000);

  const auto general = preset("small-general");
  const auto& gcfg = general.scenarios[0].config;
  CHECK(gcfg.traffic == TrafficModel::Periodic);
  for (int p : gcfg.periods) {
    CHECK(p >= 2);
    CHECK(p <= 4);
  }
  for (double l : gcfg.sample_loss) {
    CHECK(l >= 0.1);
    CHECK(l <= 0.5);
  }

  const auto var_m = preset("var-M");
  CHECK(var_m.scenarios.size() == 4);
  for (const auto& s : var_m.scenarios) {
    CHECK(s.config.num_uavs == 3);
    CHECK(s.config.sample_channels == 2);
    CHECK(s.config.update_channels == 1);
  }

  const auto var_n = preset("var-N");
  std::vector<int> uavs;
  for (const auto& s : var_n.scenarios) uavs.push_back(s.config.num_uavs);
  CHECK(uavs == std::vector<int>{2, 3, 5});

  const auto large = preset("large");
  CHECK(large.scenarios.size() == 2);
  CHECK(large.scenarios[0].config.num_devices == 60);
  CHECK(large.scenarios[1].config.num_devices == 45);
  CHECK(large.policies.back() == "dqn");

  CHECK_THROWS_AS(preset("nope"), std::invalid_argument);
}

TEST_CASE("preset draws are fixtures: same call, same scenario") {
  const auto a = preset("small-general").scenarios[0].config;
  const auto b = preset("small-general").scenarios[0].config;
  CHECK(a.periods == b.periods);
  CHECK(a.sample_loss == b.sample_loss);
  CHECK(a.update_loss == b.update_loss);
}

TEST_CASE("experiments are reproducible and sorted") {
  ExperimentSpec spec = preset("small-ideal");
  spec.n_runs = 64;
  const auto rows = run_experiment(spec);
  CHECK(rows.size() == 4 * 4); // policies x metrics
  CHECK(std::is_sorted(rows.begin(), rows.end(),
                       [](const ResultRow& a, const ResultRow& b) {
                         return std::tie(a.scenario, a.policy, a.metric) <
                                std::tie(b.scenario, b.policy, b.metric);
                       }));
  CHECK(strip_seconds(rows) == strip_seconds(run_experiment(spec)));
  for (const auto& r : rows) CHECK(r.n_runs == 64);
}

TEST_CASE("job count does not change the numbers") {
  ExperimentSpec spec = preset("small-general");
  spec.n_runs = 40;
  const auto serial = strip_seconds(run_experiment(spec));
  spec.jobs = 4;
  CHECK(strip_seconds(run_experiment(spec)) == serial);
}

TEST_CASE("full sampling capacity equalizes the UAV side across policies") {
  // L equals the cell size, so every policy samples every device and the
  // access-hop ages coincide run by run.
  ExperimentSpec spec = preset("var-K");
  spec.scenarios.erase(spec.scenarios.begin() + 1, spec.scenarios.end());
  spec.n_runs = 30;
  const auto rows = run_experiment(spec);
  const auto name = spec.scenarios[0].name;
  const double reference = mean_of(rows, name, "maf-mad", "aoi_uav_total");
  for (const auto& policy : {"maf", "rr", "random"})
    CHECK(mean_of(rows, name, policy, "aoi_uav_total") == reference);
}

TEST_CASE("comparison report ranks and gaps") {
  std::vector<ResultRow> rows;
  ResultRow a;
  a.scenario = "s";
  a.metric = "aoi_tbs_total";
  a.policy = "p";
  a.mean = 8.0;
  a.std_err = 0.05;
  a.n_runs = 1000;
  ResultRow b = a;
  b.policy = "q";
  b.mean = 10.0;
  rows = {b, a};
  const auto report = compare_report(rows);
  REQUIRE(report.size() == 1);
  CHECK(report[0].policy_a == "p"); // ranked: lower mean first
  CHECK(report[0].gap == doctest::Approx(0.2));
  CHECK(report[0].significant);

  // identical rows: zero gap, not significant
  ResultRow c = a;
  c.policy = "r";
  const auto same = compare_report({a, c});
  CHECK(same[0].gap == doctest::Approx(0.0));
  CHECK_FALSE(same[0].significant);

  // nothing to compare
  CHECK_THROWS_AS(compare_report({a}), std::invalid_argument);
  ResultRow other = b;
  other.scenario = "s2";
  CHECK_THROWS_AS(compare_report({a, other}), std::invalid_argument);
}

TEST_CASE("welch test behaves at the edges") {
  CHECK(welch_p_value(1.0, 0.0, 100, 1.0, 0.0, 100) == 1.0);
  CHECK(welch_p_value(1.0, 0.0, 100, 2.0, 0.0, 100) == 0.0);
  CHECK(welch_p_value(10.0, 0.1, 100, 10.05, 0.1, 100) > 0.5);
  CHECK(welch_p_value(10.0, 0.1, 100, 11.0, 0.1, 100) < 1e-6);
}

TEST_CASE("result csv round trips") {
  std::vector<ResultRow> rows;
  ResultRow r;
  r.scenario = "var-M:M=6";
  r.policy = "maf-mad";
  r.metric = "aoi_tbs_total";
  r.mean = 12.3456789;
  r.std_err = 0.001;
  r.n_runs = 1000;
  r.seconds = 1.5;
  rows.push_back(r);
  r.scenario = "weird, \"name\"";
  rows.push_back(r);

  std::stringstream io;
  write_result_csv(io, rows);
  std::string header;
  std::getline(io, header);
  CHECK(header == "scenario,policy,metric,mean,stderr,n_runs,seconds");
  io.seekg(0);
  CHECK(read_result_csv(io) == rows);
}

TEST_CASE("experiment spec json with a preset base") {
  const auto spec = parse_experiment_json(R"({
    "preset": "small-ideal",
    "n_runs": 17,
    "base_seed": 9,
    "policies": ["maf-mad", "rr"],
    "out": "results.csv"
  })");
  CHECK(spec.scenarios.size() == 1);
  CHECK(spec.n_runs == 17);
  CHECK(spec.base_seed == 9);
  CHECK(spec.policies == std::vector<std::string>{"maf-mad", "rr"});
  CHECK(spec.out_path == "results.csv");
}

TEST_CASE("experiment spec json with explicit scenarios") {
  const auto spec = parse_experiment_json(R"({
    "scenarios": [
      {"name": "toy", "config": {
        "num_devices": 2, "num_uavs": 1, "sample_channels": 1,
        "update_channels": 1, "horizon": 5, "traffic": "generate_at_will",
        "seed": 4}}
    ],
    "policies": ["maf-mad"],
    "n_runs": 3
  })");
  CHECK(spec.scenarios.size() == 1);
  CHECK(spec.scenarios[0].name == "toy");
  CHECK(spec.scenarios[0].config.num_devices == 2);
  const auto rows = run_experiment(spec);
  CHECK(rows.size() == 4);
  CHECK_THROWS(parse_experiment_json(R"({"policies": ["maf-mad"]})"));
}

TEST_CASE("dqn rows need a checkpoint and cap violations are recorded") {
  ExperimentSpec spec;
  spec.scenarios.push_back(
      {"toy", parse_scenario_json(R"({
        "num_devices": 2, "num_uavs": 1, "sample_channels": 1,
        "update_channels": 1, "horizon": 5, "traffic": "generate_at_will",
        "seed": 4})")});
  spec.policies = {"dqn"};
  spec.n_runs = 2;
  CHECK_THROWS_WITH_AS(run_experiment(spec),
                       "dqn policy requires a checkpoint or a training sub-spec",
                       std::runtime_error);

  // oversized action space: the row records it, other policies still run
  ExperimentSpec large = preset("large");
  large.n_runs = 1;
  large.policies = {"maf-mad", "dqn"};
  large.scenarios.erase(large.scenarios.begin() + 1);
  const auto rows = run_experiment(large);
  bool cap_row = false, mafmad_row = false;
  for (const auto& r : rows) {
    if (r.policy == "dqn" && r.metric == "action_space_exceeded") {
      cap_row = true;
      CHECK(r.mean > 1e6);
      CHECK(r.n_runs == 0);
    }
    if (r.policy == "maf-mad" && r.metric == "aoi_tbs_total") mafmad_row = true;
  }
  CHECK(cap_row);
  CHECK(mafmad_row);
}

TEST_CASE("dqn training sub-spec feeds the experiment") {
  ExperimentSpec spec;
  spec.scenarios.push_back(
      {"toy", parse_scenario_json(R"({
        "num_devices": 2, "num_uavs": 1, "sample_channels": 1,
        "update_channels": 1, "horizon": 5, "traffic": "generate_at_will",
        "seed": 4})")});
  spec.policies = {"maf-mad", "dqn"};
  spec.n_runs = 5;
  DqnConfig dqn;
  dqn.episodes = 20;
  dqn.hidden1 = 8;
  dqn.hidden2 = 8;
  dqn.batch_size = 4;
  dqn.eval_episodes = 2;
  spec.dqn_train = dqn;
  const auto rows = run_experiment(spec);
  int dqn_rows = 0;
  for (const auto& r : rows)
    if (r.policy == "dqn") ++dqn_rows;
  CHECK(dqn_rows == 4);
}

TEST_CASE("train spec json") {
  const auto spec = parse_train_json(R"({
    "scenario": {
      "num_devices": 2, "num_uavs": 1, "sample_channels": 1,
      "update_channels": 1, "horizon": 5, "traffic": "generate_at_will",
      "seed": 4},
    "episodes": 100, "hidden1": 16, "hidden2": 16, "seed": 2,
    "checkpoint_out": "x.ckpt", "curve_out": "x.csv"
  })");
  CHECK(spec.dqn.episodes == 100);
  CHECK(spec.dqn.hidden1 == 16);
  CHECK(spec.scenario.config.num_devices == 2);
  CHECK(spec.checkpoint_out == "x.ckpt");
  CHECK(spec.curve_out == "x.csv");
  CHECK_THROWS(parse_train_json(R"({"episodes": 5})"));
}

TEST_CASE("policy ordering is stable across base seeds") {
  for (std::uint64_t seed : {1, 77, 1234, 9999, 424242}) {
    ExperimentSpec spec = preset("small-ideal");
    spec.n_runs = 300;
    spec.base_seed = seed;
    const auto rows = run_experiment(spec);
    const double mafmad = mean_of(rows, "small-ideal", "maf-mad", "aoi_tbs_total");
    CHECK(mafmad < mean_of(rows, "small-ideal", "maf", "aoi_tbs_total"));
    CHECK(mafmad < mean_of(rows, "small-ideal", "rr", "aoi_tbs_total"));
    CHECK(mafmad < mean_of(rows, "small-ideal", "random", "aoi_tbs_total"));
  }
}
