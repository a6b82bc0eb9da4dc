// Command-line front end: experiment runs, presets, DQN training, the
// exact small-instance solver, and result comparison.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "uavrelay/csv.hpp"
#include "uavrelay/dqn.hpp"
#include "uavrelay/harness.hpp"
#include "uavrelay/oracle.hpp"

namespace {

using namespace uavrelay;

void write_rows(const std::string& out_path, const std::vector<ResultRow>& rows) {
  if (out_path.empty()) {
    write_result_csv(std::cout, rows);
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  write_result_csv(out, rows);
  std::cerr << "wrote " << rows.size() << " rows to " << out_path << "\n";
}

// One traced episode (the first replication's seeds) per scenario/policy.
void write_traces(const ExperimentSpec& spec, const std::string& prefix) {
  for (const auto& named : spec.scenarios) {
    Rng topo_rng(named.config.seed);
    Env env(named.config, build_topology(named.config, topo_rng));
    for (const auto& policy : spec.policies) {
      std::unique_ptr<Scheduler> sched;
      if (policy == "dqn") {
        if (spec.dqn_checkpoint.empty()) continue;
        sched = load_dqn_scheduler(spec.dqn_checkpoint, env, spec.action_space_cap);
      } else {
        sched = make_scheduler(policy, env.topology());
      }
      std::string name = named.name + "_" + policy;
      for (char& ch : name)
        if (ch == '/' || ch == ':' || ch == ',' || ch == '=') ch = '-';
      const std::string path = prefix + name + ".csv";
      std::ofstream file(path);
      if (!file) throw std::runtime_error("cannot write " + path);
      TraceWriter trace(file, named.config.num_devices);
      Rng env_rng(derive_seed(spec.base_seed, 0));
      Rng pol_rng(derive_seed(spec.base_seed, 1));
      run_episode(env, *sched, env_rng, pol_rng, &trace);
      std::cerr << "wrote trace " << path << "\n";
    }
  }
}

void apply_overrides(ExperimentSpec& spec, int runs, std::int64_t seed, int jobs,
                     const std::string& out, const std::string& dqn_checkpoint) {
  if (runs > 0) spec.n_runs = runs;
  if (seed >= 0) spec.base_seed = static_cast<std::uint64_t>(seed);
  if (jobs > 0) spec.jobs = jobs;
  if (!out.empty()) spec.out_path = out;
  if (!dqn_checkpoint.empty()) {
    spec.dqn_checkpoint = dqn_checkpoint;
    bool listed = false;
    for (const auto& p : spec.policies) listed |= p == "dqn";
    if (!listed) spec.policies.push_back("dqn");
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Two-hop UAV-relayed IoT network AoI scheduling simulator"};
  app.require_subcommand(1);
  app.fallthrough(); // lets --out/--runs/--seed/--jobs follow the subcommand

  std::string out;
  int runs = 0;
  std::int64_t seed = -1;
  int jobs = 0;
  app.add_option("--out", out, "Output CSV path (default: stdout)");
  app.add_option("--runs", runs, "Override replication count");
  app.add_option("--seed", seed, "Override base seed");
  app.add_option("--jobs", jobs, "Worker threads for replications");

  auto* run_cmd = app.add_subcommand("run", "Run an experiment spec file");
  std::string spec_file;
  std::string run_dqn_ckpt;
  std::string trace_prefix;
  run_cmd->add_option("spec-file", spec_file, "Experiment spec (JSON)")->required();
  run_cmd->add_option("--dqn", run_dqn_ckpt, "Checkpoint enabling the dqn policy");
  run_cmd->add_option("--trace", trace_prefix,
                      "Also write per-slot traces of the first replication to "
                      "<prefix><scenario>_<policy>.csv");

  auto* preset_cmd = app.add_subcommand("preset", "Run a named experiment preset");
  std::string preset_name;
  std::string preset_dqn_ckpt;
  bool print_only = false;
  preset_cmd->add_option("name", preset_name, "Preset name")->required();
  preset_cmd->add_option("--dqn", preset_dqn_ckpt, "Checkpoint enabling the dqn policy");
  preset_cmd->add_flag("--print", print_only, "Print the preset scenarios and exit");

  auto* train_cmd = app.add_subcommand("train", "Train a DQN scheduler");
  std::string train_file;
  train_cmd->add_option("dqn-config", train_file, "Training spec (JSON)")->required();

  auto* oracle_cmd =
      app.add_subcommand("oracle", "Exact optimum vs. policies on a tiny scenario");
  std::string scenario_file;
  std::uint64_t budget = 10'000'000;
  oracle_cmd->add_option("scenario", scenario_file, "Scenario config (JSON)")
      ->required();
  oracle_cmd->add_option("--budget", budget, "Node budget for the exact solver");

  auto* compare_cmd =
      app.add_subcommand("compare", "Pairwise policy comparison of result CSVs");
  std::vector<std::string> csv_files;
  compare_cmd->add_option("csv", csv_files, "Result CSV files")->required();

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed()) {
    ExperimentSpec spec = load_experiment_file(spec_file);
    apply_overrides(spec, runs, seed, jobs, out, run_dqn_ckpt);
    write_rows(spec.out_path, run_experiment(spec));
    if (!trace_prefix.empty()) write_traces(spec, trace_prefix);
    return 0;
  }

  if (preset_cmd->parsed()) {
    ExperimentSpec spec = preset(preset_name);
    apply_overrides(spec, runs, seed, jobs, out, preset_dqn_ckpt);
    if (print_only) {
      for (const auto& s : spec.scenarios)
        std::cout << s.name << "\n" << scenario_to_json(s.config) << "\n";
      return 0;
    }
    write_rows(spec.out_path, run_experiment(spec));
    return 0;
  }

  if (train_cmd->parsed()) {
    TrainSpec spec = load_train_file(train_file);
    if (seed >= 0) spec.dqn.seed = static_cast<std::uint64_t>(seed);
    if (!out.empty()) spec.checkpoint_out = out;
    spec.scenario.config.validate();
    Rng topo_rng(spec.scenario.config.seed);
    Env env(spec.scenario.config, build_topology(spec.scenario.config, topo_rng));
    ActionSpace space(env.topology(), spec.scenario.config.sample_channels,
                      spec.scenario.config.update_channels);
    const TrainResult result = train_dqn(env, space, spec.dqn);
    save_dqn_checkpoint(spec.checkpoint_out, result, env, spec.dqn);
    if (!spec.curve_out.empty()) {
      std::ofstream curve(spec.curve_out);
      if (!curve) throw std::runtime_error("cannot write " + spec.curve_out);
      write_learning_curve(curve, result.curve);
    }
    const auto& last = result.curve.back();
    std::cerr << "trained " << result.curve.size() << " episodes, final eval AoI "
              << format_double(last.eval_avg_aoi_total) << " (per slot "
              << format_double(last.eval_avg_aoi_per_slot) << "), checkpoint "
              << spec.checkpoint_out << "\n";
    return 0;
  }

  if (oracle_cmd->parsed()) {
    const ScenarioConfig config = load_scenario_file(scenario_file);
    Rng topo_rng(config.seed);
    const Topology topo = build_topology(config, topo_rng);
    const OptimalResult opt = optimal_cost(config, topo, budget);

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out.empty()) {
      file.open(out);
      if (!file) throw std::runtime_error("cannot write " + out);
      os = &file;
    }
    *os << "scenario,policy,optimal_cost,policy_cost,gap\n";
    const std::pair<const char*, std::function<JointAction(const PolicyView&)>>
        policies[] = {{"maf-mad", [](const PolicyView& v) { return maf_mad(v); }},
                      {"maf", [](const PolicyView& v) { return maf(v); }},
                      {"rr", round_robin_at_slot}};
    for (const auto& [name, fn] : policies) {
      const PolicyEvalResult eval = evaluate_policy_exact(config, topo, fn, budget);
      const double gap =
          opt.cost != 0.0 ? (eval.cost - opt.cost) / opt.cost : 0.0;
      *os << scenario_file << ',' << name << ',' << format_double(opt.cost) << ','
          << format_double(eval.cost) << ',' << format_double(gap) << '\n';
    }
    return 0;
  }

  if (compare_cmd->parsed()) {
    std::vector<ResultRow> rows;
    for (const auto& path : csv_files) {
      std::ifstream in(path);
      if (!in) throw std::runtime_error("cannot open " + path);
      auto part = read_result_csv(in);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    const auto report = compare_report(rows);
    if (out.empty()) {
      write_comparison_csv(std::cout, report);
    } else {
      std::ofstream file(out);
      if (!file) throw std::runtime_error("cannot write " + out);
      write_comparison_csv(file, report);
    }
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '"' || c == '\n') c = '\'';
    std::cerr << "{\"error\":\"" << msg << "\"}\n";
    return 1;
  }
}
