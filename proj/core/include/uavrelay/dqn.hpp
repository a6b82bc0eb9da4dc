#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "uavrelay/actions.hpp"
#include "uavrelay/env.hpp"
#include "uavrelay/nn.hpp"
#include "uavrelay/rng.hpp"
#include "uavrelay/schedulers.hpp"

namespace uavrelay {

/// One transition. Observations are stored raw; input normalization is
/// applied at the network boundary.
struct Experience {
  std::vector<double> x;
  int action = 0;
  double reward = 0.0;
  std::vector<double> x_next;
  bool terminal = false; // x_next sits on the episode's T+1 boundary
};

/// Bounded FIFO store with uniform sampling, eviction strictly
/// oldest-first.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return ring_.size(); }
  void push(Experience e);

  std::size_t sample_index(Rng& rng) const;
  const Experience& sample(Rng& rng) const { return ring_[sample_index(rng)]; }
  const Experience& at(std::size_t i) const { return ring_[i]; }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0; // overwrite position once full
  std::vector<Experience> ring_;
};

struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  double decay_fraction = 0.5; // of total episodes
  std::int64_t total_episodes = 1;
};

/// Linear interpolation from start to end over the first
/// decay_fraction * total episodes, constant afterwards.
double epsilon_at(const EpsilonSchedule& schedule, std::int64_t episode);

struct DqnConfig {
  double learning_rate = 0.001;
  double gamma = 1.0;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.5;
  std::size_t replay_capacity = 50000;
  int batch_size = 16;
  int target_sync_period = 10;
  enum class SyncUnit { OptimizerSteps, Episodes };
  SyncUnit sync_unit = SyncUnit::OptimizerSteps;
  std::int64_t episodes = 1'000'000;
  int hidden1 = 1024;
  int hidden2 = 1024;
  bool normalize_inputs = true; // divide state entries by the horizon
  std::uint64_t seed = 1;
  std::int64_t eval_interval = 0; // 0: evaluate only after the last episode
  int eval_episodes = 200;

  void validate() const;
  EpsilonSchedule epsilon_schedule() const {
    return {epsilon_start, epsilon_end, epsilon_decay_fraction, episodes};
  }
};

/// Epsilon-greedy choice over the q-values; greedy ties break to the
/// lowest action index.
int select_action(const Mlp& net, std::span<const double> x, double epsilon,
                  std::uint64_t action_count, Rng& rng);

/// y = r for terminal transitions, else r + gamma * max_a Q(x', a | target).
/// input_scale divides the stored observation before the forward pass.
double td_target(const Experience& exp, const Mlp& target_net, double gamma,
                 double input_scale = 1.0);

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::int64_t episode, const std::string& what)
      : std::runtime_error("training diverged at episode " +
                           std::to_string(episode) + ": " + what),
        episode(episode) {}
  std::int64_t episode;
};

struct LearningCurvePoint {
  std::int64_t episode = 0; // 1-based
  double epsilon = 0.0;
  double train_return = 0.0;
  // NaN when this episode was not an evaluation point.
  double eval_avg_aoi_total = std::numeric_limits<double>::quiet_NaN();
  double eval_avg_aoi_per_slot = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  Mlp net;
  Mlp target_net; // as of the last sync
  AdamState adam;
  std::vector<LearningCurvePoint> curve;
  std::int64_t optimizer_steps = 0;
};

TrainResult train_dqn(const Env& env, const ActionSpace& space,
                      const DqnConfig& config);

struct EvalResult {
  double mean_aoi_total = 0.0;    // mean over episodes of the per-device total
  double mean_aoi_per_slot = 0.0;
  std::vector<double> per_episode_aoi_total;
};

/// Greedy (epsilon = 0) rollouts over seeded episodes.
EvalResult evaluate_greedy(const Env& env, const ActionSpace& space,
                           const Mlp& net, bool normalize_inputs, int episodes,
                           std::uint64_t seed_base);

/// Header: episode,epsilon,train_return,eval_avg_aoi_eq10,eval_avg_aoi_per_slot
/// with the two evaluation columns empty on non-evaluation episodes.
void write_learning_curve(std::ostream& out,
                          const std::vector<LearningCurvePoint>& curve);

/// Greedy scheduler over a trained network, usable wherever the baseline
/// schedulers are.
class DqnScheduler final : public Scheduler {
 public:
  DqnScheduler(Mlp net, ActionSpace space, bool normalize_inputs, int horizon);

  std::string_view name() const override { return "dqn"; }
  JointAction decide(const PolicyView& view, Rng& rng) override;

 private:
  Mlp net_;
  ActionSpace space_;
  bool normalize_;
  int horizon_;
};

void save_dqn_checkpoint(const std::filesystem::path& path,
                         const TrainResult& result, const Env& env,
                         const DqnConfig& config);

/// Loads a checkpoint and validates it against the scenario's observation
/// and action dimensions.
std::unique_ptr<DqnScheduler> load_dqn_scheduler(
    const std::filesystem::path& path, const Env& env,
    std::uint64_t action_space_cap = ActionSpace::kDefaultCap);

}  // namespace uavrelay
