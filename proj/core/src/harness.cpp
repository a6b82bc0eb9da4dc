#include "uavrelay/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "uavrelay/csv.hpp"

namespace uavrelay {

using nlohmann::json;

MetricsSummary run_episode(const Env& env, Scheduler& policy, Rng& env_rng,
                           Rng& policy_rng, TraceWriter* trace) {
  policy.begin_episode();
  NetworkState state = env.reset();
  EpisodeMetrics metrics;
  const int horizon = env.config().horizon;
  for (int t = 1; t <= horizon; ++t) {
    metrics.record_state(state, t == horizon);
    const PolicyView view = make_view(state, env);
    const JointAction action = policy.decide(view, policy_rng);
    StepOutcome outcome = env.step(state, action, env_rng);
    metrics.record_reward(outcome.reward);
    if (trace) trace->record(state, action, outcome);
    state = std::move(outcome.next);
  }
  return finalize_metrics(metrics, env.config().num_devices, horizon);
}

namespace {

constexpr const char* kMetricNames[4] = {"aoi_tbs_total", "aoi_tbs_per_slot",
                                         "aoi_uav_total", "aoi_uav_per_slot"};

struct CellStats {
  std::vector<double> values[4]; // per metric, indexed by run
};

void aggregate_rows(std::vector<ResultRow>& rows, const std::string& scenario,
                    const std::string& policy, const CellStats& stats,
                    double seconds) {
  for (int k = 0; k < 4; ++k) {
    const auto& v = stats.values[k];
    const int n = static_cast<int>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
    ResultRow row;
    row.scenario = scenario;
    row.policy = policy;
    row.metric = kMetricNames[k];
    row.mean = mean;
    row.std_err = sd / std::sqrt(static_cast<double>(n));
    row.n_runs = n;
    row.seconds = seconds;
    rows.push_back(std::move(row));
  }
}

// Replications are embarrassingly parallel: every run writes its own
// slot in the preallocated value arrays, so the aggregate is identical
// for any job count.
CellStats run_cell(const Env& env, const std::string& policy_name,
                   DqnScheduler* dqn, int n_runs, std::uint64_t base_seed,
                   int jobs) {
  CellStats stats;
  for (auto& v : stats.values) v.resize(static_cast<std::size_t>(n_runs));

  const auto worker = [&](int begin, int end) {
    std::unique_ptr<Scheduler> own;
    Scheduler* scheduler;
    if (dqn) {
      scheduler = dqn; // decide() is stateless, safe to share across runs
    } else {
      own = make_scheduler(policy_name, env.topology());
      scheduler = own.get();
    }
    for (int i = begin; i < end; ++i) {
      const std::uint64_t seed_i = base_seed + static_cast<std::uint64_t>(i);
      Rng env_rng(derive_seed(seed_i, 0));
      Rng policy_rng(derive_seed(seed_i, 1));
      const MetricsSummary s = run_episode(env, *scheduler, env_rng, policy_rng);
      stats.values[0][static_cast<std::size_t>(i)] = s.aoi_tbs_total;
      stats.values[1][static_cast<std::size_t>(i)] = s.aoi_tbs_per_slot;
      stats.values[2][static_cast<std::size_t>(i)] = s.aoi_uav_total;
      stats.values[3][static_cast<std::size_t>(i)] = s.aoi_uav_per_slot;
    }
  };

  const int worker_count = std::max(1, std::min(jobs, n_runs));
  if (worker_count == 1) {
    worker(0, n_runs);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n_runs + worker_count - 1) / worker_count;
    for (int w = 0; w < worker_count; ++w) {
      const int begin = w * chunk;
      const int end = std::min(n_runs, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  return stats;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec) {
  if (spec.scenarios.empty()) throw std::invalid_argument("no scenarios in spec");
  if (spec.policies.empty()) throw std::invalid_argument("no policies in spec");
  if (spec.n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");

  std::vector<ResultRow> rows;
  for (const auto& named : spec.scenarios) {
    named.config.validate();
    Rng topo_rng(named.config.seed);
    Env env(named.config, build_topology(named.config, topo_rng));

    for (const auto& policy_name : spec.policies) {
      const auto started = std::chrono::steady_clock::now();
      std::unique_ptr<DqnScheduler> dqn;
      if (policy_name == "dqn") {
        try {
          // the cap gate comes first: an oversized space is recorded even
          // when no checkpoint was supplied
          ActionSpace space(env.topology(), named.config.sample_channels,
                            named.config.update_channels, spec.action_space_cap);
          if (spec.dqn_train) {
            DqnConfig cfg = *spec.dqn_train;
            TrainResult trained = train_dqn(env, space, cfg);
            dqn = std::make_unique<DqnScheduler>(std::move(trained.net),
                                                 std::move(space),
                                                 cfg.normalize_inputs,
                                                 named.config.horizon);
          } else if (!spec.dqn_checkpoint.empty()) {
            dqn = load_dqn_scheduler(spec.dqn_checkpoint, env,
                                     spec.action_space_cap);
          } else {
            throw std::runtime_error(
                "dqn policy requires a checkpoint or a training sub-spec");
          }
        } catch (const ActionSpaceTooLarge& e) {
          // Recorded, not fatal to the other policies.
          ResultRow row;
          row.scenario = named.name;
          row.policy = policy_name;
          row.metric = "action_space_exceeded";
          row.mean = e.approximate_count;
          row.std_err = 0.0;
          row.n_runs = 0;
          row.seconds = 0.0;
          rows.push_back(std::move(row));
          continue;
        }
      }
      const CellStats stats = run_cell(env, policy_name, dqn.get(), spec.n_runs,
                                       spec.base_seed, spec.jobs);
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
              .count();
      aggregate_rows(rows, named.name, policy_name, stats, seconds);
    }
  }
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.scenario, a.policy, a.metric) <
           std::tie(b.scenario, b.policy, b.metric);
  });
  return rows;
}

// ---- presets ----

namespace {

ScenarioConfig base_scenario(int m, int n, int l, int k, std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.num_devices = m;
  cfg.num_uavs = n;
  cfg.sample_channels = l;
  cfg.update_channels = k;
  cfg.horizon = 10;
  cfg.traffic = TrafficModel::GenerateAtWill;
  cfg.sample_loss.assign(static_cast<std::size_t>(m), 0.0);
  cfg.update_loss.assign(static_cast<std::size_t>(m), 0.0);
  cfg.association = AssociationMode::ExplicitEqualSplit;
  cfg.seed = seed;
  return cfg;
}

const std::vector<std::string> kBaselines = {"maf-mad", "maf", "rr", "random"};

}  // namespace

ScenarioConfig with_general_conditions(ScenarioConfig cfg, std::uint64_t draw_seed) {
  Rng rng(draw_seed);
  cfg.traffic = TrafficModel::Periodic;
  cfg.periods.resize(static_cast<std::size_t>(cfg.num_devices));
  for (auto& p : cfg.periods) p = rng.uniform_int(2, 4);
  for (auto& l : cfg.sample_loss) l = 0.1 + 0.4 * rng.uniform01();
  for (auto& l : cfg.update_loss) l = 0.1 + 0.4 * rng.uniform01();
  return cfg;
}

std::vector<std::string> preset_names() {
  return {"small-ideal", "small-general", "var-M", "var-N",
          "var-L",       "var-K",         "large"};
}

ExperimentSpec preset(const std::string& name) {
  ExperimentSpec spec;
  spec.policies = kBaselines;
  spec.n_runs = 10000;
  spec.base_seed = 1;

  if (name == "small-ideal") {
    spec.scenarios.push_back({"small-ideal", base_scenario(12, 2, 1, 1, 101)});
  } else if (name == "small-general") {
    spec.scenarios.push_back(
        {"small-general", with_general_conditions(base_scenario(12, 2, 1, 1, 102), 1002)});
  } else if (name == "var-M") {
    for (int m : {6, 9, 12, 15}) {
      auto cfg = with_general_conditions(base_scenario(m, 3, 2, 1, 103), 1003);
      spec.scenarios.push_back({"var-M:M=" + std::to_string(m), std::move(cfg)});
    }
  } else if (name == "var-N") {
    for (int n : {2, 3, 5}) {
      auto cfg = with_general_conditions(base_scenario(10, n, 2, 1, 104), 1004);
      spec.scenarios.push_back({"var-N:N=" + std::to_string(n), std::move(cfg)});
    }
  } else if (name == "var-L") {
    for (int l : {1, 2, 3}) {
      auto cfg = with_general_conditions(base_scenario(9, 3, l, 1, 105), 1005);
      spec.scenarios.push_back({"var-L:L=" + std::to_string(l), std::move(cfg)});
    }
  } else if (name == "var-K") {
    for (int k : {1, 2, 3}) {
      auto cfg = with_general_conditions(base_scenario(9, 3, 3, k, 106), 1006);
      spec.scenarios.push_back({"var-K:K=" + std::to_string(k), std::move(cfg)});
    }
  } else if (name == "large") {
    spec.scenarios.push_back(
        {"large:M=60,N=2", with_general_conditions(base_scenario(60, 2, 2, 2, 107), 1007)});
    spec.scenarios.push_back(
        {"large:M=45,N=3", with_general_conditions(base_scenario(45, 3, 2, 2, 108), 1008)});
    spec.policies.push_back("dqn"); // records the cap violation
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  return spec;
}

// ---- comparison ----

double welch_p_value(double mean_a, double std_err_a, int n_a, double mean_b,
                     double std_err_b, int n_b) {
  const double va = std_err_a * std_err_a;
  const double vb = std_err_b * std_err_b;
  if (va + vb == 0.0) return mean_a == mean_b ? 1.0 : 0.0;
  const double t = (mean_a - mean_b) / std::sqrt(va + vb);
  double df = (va + vb) * (va + vb);
  double denom = 0.0;
  if (n_a > 1) denom += va * va / (n_a - 1);
  if (n_b > 1) denom += vb * vb / (n_b - 1);
  if (denom == 0.0) return 0.0;
  df /= denom;
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(dist, -std::abs(t));
}

std::vector<ComparisonRow> compare_report(const std::vector<ResultRow>& rows,
                                          double alpha) {
  std::map<std::pair<std::string, std::string>, std::vector<const ResultRow*>> groups;
  for (const auto& row : rows) {
    if (row.metric == "action_space_exceeded") continue;
    groups[{row.scenario, row.metric}].push_back(&row);
  }
  std::vector<ComparisonRow> out;
  bool any_pair = false;
  for (auto& [key, members] : groups) {
    if (members.size() < 2) continue;
    any_pair = true;
    std::sort(members.begin(), members.end(),
              [](const ResultRow* a, const ResultRow* b) {
                return std::tie(a->mean, a->policy) < std::tie(b->mean, b->policy);
              });
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        const ResultRow& a = *members[i];
        const ResultRow& b = *members[j];
        ComparisonRow cmp;
        cmp.scenario = key.first;
        cmp.metric = key.second;
        cmp.policy_a = a.policy;
        cmp.policy_b = b.policy;
        cmp.mean_a = a.mean;
        cmp.mean_b = b.mean;
        cmp.gap = b.mean != 0.0 ? (b.mean - a.mean) / b.mean : 0.0;
        const double va = a.std_err * a.std_err, vb = b.std_err * b.std_err;
        cmp.t_stat = (va + vb) > 0.0
                         ? (a.mean - b.mean) / std::sqrt(va + vb)
                         : (a.mean == b.mean ? 0.0
                                             : -std::numeric_limits<double>::infinity());
        cmp.p_value = welch_p_value(a.mean, a.std_err, a.n_runs, b.mean, b.std_err,
                                    b.n_runs);
        cmp.significant = cmp.p_value < alpha;
        out.push_back(std::move(cmp));
      }
    }
  }
  if (!any_pair)
    throw std::invalid_argument(
        "comparison needs at least two policies on a common scenario");
  return out;
}

// ---- CSV ----

void write_result_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "scenario,policy,metric,mean,stderr,n_runs,seconds\n";
  for (const auto& row : rows) {
    write_csv_field(out, row.scenario);
    out << ',';
    write_csv_field(out, row.policy);
    out << ',';
    write_csv_field(out, row.metric);
    out << ',' << format_double(row.mean) << ',' << format_double(row.std_err)
        << ',' << row.n_runs << ',' << format_double(row.seconds) << '\n';
  }
}

std::vector<ResultRow> read_result_csv(std::istream& in) {
  std::vector<ResultRow> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  if (line != "scenario,policy,metric,mean,stderr,n_runs,seconds")
    throw std::runtime_error("unexpected results CSV header: " + line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) throw std::runtime_error("malformed results CSV row: " + line);
    ResultRow row;
    row.scenario = f[0];
    row.policy = f[1];
    row.metric = f[2];
    row.mean = std::stod(f[3]);
    row.std_err = std::stod(f[4]);
    row.n_runs = std::stoi(f[5]);
    row.seconds = std::stod(f[6]);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_comparison_csv(std::ostream& out,
                          const std::vector<ComparisonRow>& rows) {
  out << "scenario,metric,policy_a,policy_b,mean_a,mean_b,gap,t_stat,p_value,"
         "significant\n";
  for (const auto& row : rows) {
    write_csv_field(out, row.scenario);
    out << ',';
    write_csv_field(out, row.metric);
    out << ',' << row.policy_a << ',' << row.policy_b << ','
        << format_double(row.mean_a) << ',' << format_double(row.mean_b) << ','
        << format_double(row.gap) << ',' << format_double(row.t_stat) << ','
        << format_double(row.p_value) << ',' << (row.significant ? 1 : 0) << '\n';
  }
}

// ---- JSON specs ----

namespace {

DqnConfig parse_dqn_config(const json& j) {
  DqnConfig cfg;
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.epsilon_start = j.value("epsilon_start", cfg.epsilon_start);
  cfg.epsilon_end = j.value("epsilon_end", cfg.epsilon_end);
  cfg.epsilon_decay_fraction =
      j.value("epsilon_decay_fraction", cfg.epsilon_decay_fraction);
  cfg.replay_capacity = j.value("replay_capacity", cfg.replay_capacity);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.target_sync_period = j.value("target_sync_period", cfg.target_sync_period);
  if (j.value("sync_per_episode", false))
    cfg.sync_unit = DqnConfig::SyncUnit::Episodes;
  cfg.episodes = j.value("episodes", cfg.episodes);
  cfg.hidden1 = j.value("hidden1", cfg.hidden1);
  cfg.hidden2 = j.value("hidden2", cfg.hidden2);
  cfg.normalize_inputs = j.value("normalize_inputs", cfg.normalize_inputs);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.eval_interval = j.value("eval_interval", cfg.eval_interval);
  cfg.eval_episodes = j.value("eval_episodes", cfg.eval_episodes);
  cfg.validate();
  return cfg;
}

NamedScenario parse_named_scenario(const json& j) {
  NamedScenario named;
  if (j.contains("scenario_file")) {
    named.config = load_scenario_file(j.at("scenario_file").get<std::string>());
    named.name = j.value("name", j.at("scenario_file").get<std::string>());
  } else {
    named.config = parse_scenario_json(j.at("config").dump());
    named.name = j.value("name", "scenario");
  }
  return named;
}

}  // namespace

ExperimentSpec parse_experiment_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  ExperimentSpec spec;
  if (j.contains("preset")) {
    spec = preset(j.at("preset").get<std::string>());
  }
  if (j.contains("scenarios")) {
    spec.scenarios.clear();
    for (const auto& s : j.at("scenarios"))
      spec.scenarios.push_back(parse_named_scenario(s));
  }
  if (j.contains("policies"))
    spec.policies = j.at("policies").get<std::vector<std::string>>();
  spec.n_runs = j.value("n_runs", spec.n_runs);
  spec.base_seed = j.value("base_seed", spec.base_seed);
  spec.jobs = j.value("jobs", spec.jobs);
  spec.action_space_cap = j.value("action_space_cap", spec.action_space_cap);
  spec.dqn_checkpoint = j.value("dqn_checkpoint", spec.dqn_checkpoint);
  spec.out_path = j.value("out", spec.out_path);
  if (j.contains("dqn_train")) spec.dqn_train = parse_dqn_config(j.at("dqn_train"));
  if (spec.scenarios.empty())
    throw std::invalid_argument("experiment spec needs a preset or scenarios");
  return spec;
}

ExperimentSpec load_experiment_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open experiment spec: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment_json(ss.str());
}

TrainSpec parse_train_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  TrainSpec spec;
  if (j.contains("scenario") || j.contains("scenario_file")) {
    spec.scenario = parse_named_scenario(
        j.contains("scenario") ? json{{"config", j.at("scenario")}} : j);
  } else {
    throw std::invalid_argument("train spec needs a scenario or scenario_file");
  }
  spec.dqn = parse_dqn_config(j);
  spec.checkpoint_out = j.value("checkpoint_out", std::string("dqn.ckpt"));
  spec.curve_out = j.value("curve_out", std::string());
  return spec;
}

TrainSpec load_train_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open train spec: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_train_json(ss.str());
}

}  // namespace uavrelay
