#include "uavrelay/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "uavrelay/csv.hpp"

namespace uavrelay {

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ < 1) throw std::invalid_argument("replay capacity must be >= 1");
  ring_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ReplayMemory::push(Experience e) {
  if (ring_.size() < capacity_) {
    ring_.push_back(std::move(e));
    return;
  }
  ring_[next_] = std::move(e);
  next_ = (next_ + 1) % capacity_;
}

std::size_t ReplayMemory::sample_index(Rng& rng) const {
  if (ring_.empty()) throw std::logic_error("sampling from empty replay memory");
  return static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<int>(ring_.size()) - 1));
}

double epsilon_at(const EpsilonSchedule& schedule, std::int64_t episode) {
  const auto horizon = static_cast<std::int64_t>(
      schedule.decay_fraction * static_cast<double>(schedule.total_episodes));
  if (horizon <= 0 || episode >= horizon) return schedule.end;
  const double f = static_cast<double>(episode) / static_cast<double>(horizon);
  return schedule.start + (schedule.end - schedule.start) * f;
}

void DqnConfig::validate() const {
  if (!(epsilon_end >= 0.0 && epsilon_end <= epsilon_start && epsilon_start <= 1.0))
    throw std::invalid_argument("epsilon schedule needs 0 <= end <= start <= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("gamma must be in [0,1]");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (static_cast<std::size_t>(batch_size) > replay_capacity)
    throw std::invalid_argument("batch size must not exceed replay capacity");
  if (target_sync_period < 1)
    throw std::invalid_argument("target sync period must be >= 1");
  if (hidden1 < 1 || hidden2 < 1)
    throw std::invalid_argument("hidden layer sizes must be >= 1");
  if (episodes < 0) throw std::invalid_argument("episodes must be >= 0");
}

int select_action(const Mlp& net, std::span<const double> x, double epsilon,
                  std::uint64_t action_count, Rng& rng) {
  if (epsilon > 0.0 && rng.uniform01() < epsilon)
    return rng.uniform_int(0, static_cast<int>(action_count) - 1);
  const auto q = net.forward(x);
  int best = 0;
  for (int a = 1; a < static_cast<int>(q.size()); ++a)
    if (q[static_cast<std::size_t>(a)] > q[static_cast<std::size_t>(best)]) best = a;
  return best;
}

double td_target(const Experience& exp, const Mlp& target_net, double gamma,
                 double input_scale) {
  if (exp.terminal) return exp.reward;
  std::vector<double> x(exp.x_next);
  if (input_scale != 1.0)
    for (double& v : x) v /= input_scale;
  const auto q = target_net.forward(x);
  double best = q[0];
  for (double v : q) best = std::max(best, v);
  return exp.reward + gamma * best;
}

namespace {

std::vector<double> scaled(const std::vector<double>& x, double scale) {
  if (scale == 1.0) return x;
  std::vector<double> out(x);
  for (double& v : out) v /= scale;
  return out;
}

}  // namespace

EvalResult evaluate_greedy(const Env& env, const ActionSpace& space,
                           const Mlp& net, bool normalize_inputs, int episodes,
                           std::uint64_t seed_base) {
  const double scale =
      normalize_inputs ? static_cast<double>(env.config().horizon) : 1.0;
  EvalResult result;
  result.per_episode_aoi_total.reserve(static_cast<std::size_t>(episodes));
  double sum_total = 0.0, sum_per_slot = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Rng env_rng(derive_seed(seed_base, static_cast<std::uint64_t>(e)));
    Rng greedy_rng(0); // never consumed at epsilon = 0
    NetworkState state = env.reset();
    EpisodeMetrics metrics;
    for (int t = 1; t <= env.config().horizon; ++t) {
      metrics.record_state(state, t == env.config().horizon);
      const auto x = scaled(env.observe(state), scale);
      const int a = select_action(net, x, 0.0, space.size(), greedy_rng);
      auto outcome = env.step(state, space.action_at(static_cast<std::uint64_t>(a)),
                              env_rng);
      metrics.record_reward(outcome.reward);
      state = std::move(outcome.next);
    }
    const auto summary =
        finalize_metrics(metrics, env.config().num_devices, env.config().horizon);
    result.per_episode_aoi_total.push_back(summary.aoi_tbs_total);
    sum_total += summary.aoi_tbs_total;
    sum_per_slot += summary.aoi_tbs_per_slot;
  }
  if (episodes > 0) {
    result.mean_aoi_total = sum_total / episodes;
    result.mean_aoi_per_slot = sum_per_slot / episodes;
  }
  return result;
}

TrainResult train_dqn(const Env& env, const ActionSpace& space,
                      const DqnConfig& config) {
  config.validate();
  const int obs_len = 2 * env.config().num_devices + 1;
  const double scale =
      config.normalize_inputs ? static_cast<double>(env.config().horizon) : 1.0;

  Rng init_rng(derive_seed(config.seed, 0));
  Rng action_rng(derive_seed(config.seed, 1));
  Rng env_rng(derive_seed(config.seed, 2));
  Rng replay_rng(derive_seed(config.seed, 3));
  const std::uint64_t eval_seed = derive_seed(config.seed, 4);

  TrainResult result;
  result.net = Mlp::glorot(
      {obs_len, config.hidden1, config.hidden2, static_cast<int>(space.size())},
      init_rng);
  result.target_net = result.net;
  Mlp& target = result.target_net;
  AdamConfig adam_cfg;
  adam_cfg.base_rate = config.learning_rate;
  result.adam = AdamState(result.net.parameter_count(), adam_cfg);

  ReplayMemory memory(config.replay_capacity);
  const EpsilonSchedule schedule = config.epsilon_schedule();
  std::vector<QSample> batch(static_cast<std::size_t>(config.batch_size));

  for (std::int64_t episode = 0; episode < config.episodes; ++episode) {
    const double eps = epsilon_at(schedule, episode);
    NetworkState state = env.reset();
    double episode_return = 0.0;
    for (int t = 1; t <= env.config().horizon; ++t) {
      auto x = env.observe(state);
      const int a =
          select_action(result.net, scaled(x, scale), eps, space.size(), action_rng);
      auto outcome =
          env.step(state, space.action_at(static_cast<std::uint64_t>(a)), env_rng);
      episode_return += static_cast<double>(outcome.reward);

      Experience exp;
      exp.x = std::move(x);
      exp.action = a;
      exp.reward = static_cast<double>(outcome.reward);
      exp.x_next = env.observe(outcome.next);
      exp.terminal = (t == env.config().horizon);
      memory.push(std::move(exp));
      state = std::move(outcome.next);

      if (memory.size() < static_cast<std::size_t>(config.batch_size)) continue;
      for (auto& sample : batch) {
        const Experience& picked = memory.sample(replay_rng);
        sample.x = scaled(picked.x, scale);
        sample.action = picked.action;
        sample.target = td_target(picked, target, config.gamma, scale);
      }
      try {
        backward_and_step(result.net, result.adam, batch);
      } catch (const std::domain_error& e) {
        throw DivergenceError(episode, e.what());
      }
      result.optimizer_steps += 1;
      if (config.sync_unit == DqnConfig::SyncUnit::OptimizerSteps &&
          result.optimizer_steps % config.target_sync_period == 0)
        target = result.net;
    }
    if (config.sync_unit == DqnConfig::SyncUnit::Episodes &&
        (episode + 1) % config.target_sync_period == 0)
      target = result.net;
    if (!result.net.finite())
      throw DivergenceError(episode, "non-finite network parameter");

    LearningCurvePoint point;
    point.episode = episode + 1;
    point.epsilon = eps;
    point.train_return = episode_return;
    const bool last = episode + 1 == config.episodes;
    const bool scheduled =
        config.eval_interval > 0 && (episode + 1) % config.eval_interval == 0;
    if (last || scheduled) {
      const auto eval = evaluate_greedy(env, space, result.net,
                                        config.normalize_inputs,
                                        config.eval_episodes, eval_seed);
      point.eval_avg_aoi_total = eval.mean_aoi_total;
      point.eval_avg_aoi_per_slot = eval.mean_aoi_per_slot;
    }
    result.curve.push_back(point);
  }
  return result;
}

void write_learning_curve(std::ostream& out,
                          const std::vector<LearningCurvePoint>& curve) {
  out << "episode,epsilon,train_return,eval_avg_aoi_eq10,eval_avg_aoi_per_slot\n";
  for (const auto& p : curve) {
    out << p.episode << ',' << format_double(p.epsilon) << ','
        << format_double(p.train_return) << ',';
    if (!std::isnan(p.eval_avg_aoi_total)) out << format_double(p.eval_avg_aoi_total);
    out << ',';
    if (!std::isnan(p.eval_avg_aoi_per_slot))
      out << format_double(p.eval_avg_aoi_per_slot);
    out << '\n';
  }
}

DqnScheduler::DqnScheduler(Mlp net, ActionSpace space, bool normalize_inputs,
                           int horizon)
    : net_(std::move(net)),
      space_(std::move(space)),
      normalize_(normalize_inputs),
      horizon_(horizon) {}

JointAction DqnScheduler::decide(const PolicyView& view, Rng& rng) {
  std::vector<double> x;
  x.reserve(1 + view.aoi_uav.size() + view.aoi_tbs.size());
  x.push_back(static_cast<double>(view.t));
  for (int a : view.aoi_uav) x.push_back(static_cast<double>(a));
  for (int a : view.aoi_tbs) x.push_back(static_cast<double>(a));
  if (normalize_)
    for (double& v : x) v /= static_cast<double>(horizon_);
  const int a = select_action(net_, x, 0.0, space_.size(), rng);
  return space_.action_at(static_cast<std::uint64_t>(a));
}

void save_dqn_checkpoint(const std::filesystem::path& path,
                         const TrainResult& result, const Env& env,
                         const DqnConfig& config) {
  Checkpoint ckpt;
  ckpt.net = result.net;
  ckpt.adam = result.adam;
  ckpt.metadata["kind"] = "dqn";
  ckpt.metadata["num_devices"] = std::to_string(env.config().num_devices);
  ckpt.metadata["horizon"] = std::to_string(env.config().horizon);
  ckpt.metadata["normalize_inputs"] = config.normalize_inputs ? "1" : "0";
  ckpt.metadata["action_count"] = std::to_string(
      ActionSpace(env.topology(), env.config().sample_channels,
                  env.config().update_channels)
          .size());
  save_checkpoint(path, ckpt);
}

std::unique_ptr<DqnScheduler> load_dqn_scheduler(
    const std::filesystem::path& path, const Env& env,
    std::uint64_t action_space_cap) {
  Checkpoint ckpt = load_checkpoint(path);
  ActionSpace space(env.topology(), env.config().sample_channels,
                    env.config().update_channels, action_space_cap);
  const int obs_len = 2 * env.config().num_devices + 1;
  if (ckpt.net.input_size() != obs_len ||
      ckpt.net.output_size() != static_cast<int>(space.size()))
    throw std::runtime_error(
        "checkpoint does not fit scenario: expects input " +
        std::to_string(ckpt.net.input_size()) + " / output " +
        std::to_string(ckpt.net.output_size()) + ", scenario needs " +
        std::to_string(obs_len) + " / " + std::to_string(space.size()));
  const bool normalize = ckpt.metadata.count("normalize_inputs")
                             ? ckpt.metadata.at("normalize_inputs") == "1"
                             : true;
  return std::make_unique<DqnScheduler>(std::move(ckpt.net), std::move(space),
                                        normalize, env.config().horizon);
}

}  // namespace uavrelay
