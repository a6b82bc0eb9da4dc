#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "uavrelay/dqn.hpp"
#include "uavrelay/env.hpp"
#include "uavrelay/model.hpp"
#include "uavrelay/schedulers.hpp"

namespace uavrelay {

struct NamedScenario {
  std::string name;
  ScenarioConfig config;
};

/// One experiment: scenarios x policies x seeded replications.
struct ExperimentSpec {
  std::vector<NamedScenario> scenarios;
  std::vector<std::string> policies; // maf-mad | maf | rr | random | dqn
  int n_runs = 1;
  std::uint64_t base_seed = 1;
  int jobs = 1;
  std::uint64_t action_space_cap = ActionSpace::kDefaultCap;
  std::string dqn_checkpoint;          // pre-trained net for the dqn policy
  std::optional<DqnConfig> dqn_train;  // or train one per scenario
  std::string out_path;                // empty: stdout
};

struct ResultRow {
  std::string scenario;
  std::string policy;
  std::string metric;
  double mean = 0.0;
  double std_err = 0.0; // sample std / sqrt(n_runs)
  int n_runs = 0;
  double seconds = 0.0;

  bool operator==(const ResultRow&) const = default;
};

/// Runs every (scenario, policy) cell over n_runs episodes seeded
/// base_seed + i and emits four metric rows per cell (TBS/UAV side,
/// horizon total and per-slot). A dqn cell whose action space exceeds
/// the cap contributes an action_space_exceeded row instead of failing
/// the rest of the experiment. Results are deterministic for a given
/// spec regardless of the job count.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);

/// One seeded episode under a scheduler; policy draws and channel draws
/// come from separate streams.
MetricsSummary run_episode(const Env& env, Scheduler& policy, Rng& env_rng,
                           Rng& policy_rng, TraceWriter* trace = nullptr);

/// Named experiment presets: small-ideal, small-general, var-M, var-N,
/// var-L, var-K, large. General-conditions presets draw per-device loss
/// probabilities from [0.1, 0.5] and periods from {2,3,4}, fixed by the
/// preset seed.
ExperimentSpec preset(const std::string& name);
std::vector<std::string> preset_names();

/// Heterogeneous general conditions: periods uniform on {2,3,4} and both
/// loss probabilities uniform on [0.1, 0.5] per device, drawn from the
/// given seed so a scenario is a reproducible fixture.
ScenarioConfig with_general_conditions(ScenarioConfig cfg,
                                       std::uint64_t draw_seed);

struct ComparisonRow {
  std::string scenario;
  std::string metric;
  std::string policy_a; // lower mean
  std::string policy_b;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double gap = 0.0; // (mean_b - mean_a) / mean_b
  double t_stat = 0.0;
  double p_value = 1.0;
  bool significant = false;
};

/// Ranked pairwise comparison per (scenario, metric) group with Welch
/// significance flags. Throws if no scenario has two policies to compare.
std::vector<ComparisonRow> compare_report(const std::vector<ResultRow>& rows,
                                          double alpha = 0.01);

/// Welch's two-sided p-value from summary statistics.
double welch_p_value(double mean_a, double std_err_a, int n_a, double mean_b,
                     double std_err_b, int n_b);

// CSV with exactly: scenario,policy,metric,mean,stderr,n_runs,seconds
void write_result_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_result_csv(std::istream& in);

void write_comparison_csv(std::ostream& out,
                          const std::vector<ComparisonRow>& rows);

/// Experiment spec from JSON: either {"preset": "name", overrides...} or
/// an explicit scenario list.
ExperimentSpec parse_experiment_json(const std::string& json_text);
ExperimentSpec load_experiment_file(const std::filesystem::path& path);

/// DQN training spec (scenario + DqnConfig + output paths) from JSON.
struct TrainSpec {
  NamedScenario scenario;
  DqnConfig dqn;
  std::string checkpoint_out;
  std::string curve_out;
};
TrainSpec parse_train_json(const std::string& json_text);
TrainSpec load_train_file(const std::filesystem::path& path);

}  // namespace uavrelay
