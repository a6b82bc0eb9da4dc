#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "uavrelay/actions.hpp"
#include "uavrelay/model.hpp"
#include "uavrelay/rng.hpp"

namespace uavrelay {

/// Per-slot simulation state. aoi_uav[m] = t - stored_gen[m] always holds,
/// and aoi_tbs[m] >= aoi_uav[m] >= 1 at every slot.
struct NetworkState {
  int t = 1;
  std::vector<int> aoi_uav;
  std::vector<int> aoi_tbs;
  std::vector<int> stored_gen; // generation time of the packet held at the UAV

  bool operator==(const NetworkState&) const = default;
};

struct StepOutcome {
  NetworkState next;
  std::int64_t reward = 0; // -sum of aoi_tbs at t+1
  // Per-device delivery flags; meaningful only for devices the action
  // actually sampled / updated.
  std::vector<std::uint8_t> sample_delivered;
  std::vector<std::uint8_t> update_delivered;
};

class InfeasibleActionError : public std::invalid_argument {
 public:
  explicit InfeasibleActionError(const FeasibilityVerdict& verdict)
      : std::invalid_argument("infeasible action: " + verdict.joined()) {}
};

/// Writes one CSV row per slot:
/// t,action,deliveries,aoi_uav_1..M,aoi_tbs_1..M,reward
class TraceWriter {
 public:
  TraceWriter(std::ostream& out, int num_devices);
  void record(const NetworkState& pre, const JointAction& action,
              const StepOutcome& outcome);

 private:
  std::ostream& out_;
};

/// The slotted two-hop AoI environment. Immutable after construction;
/// step is a pure function of (state, action, random draws), so
/// independent episodes can run concurrently with their own streams.
class Env {
 public:
  Env(ScenarioConfig config, Topology topology);

  const ScenarioConfig& config() const { return config_; }
  const Topology& topology() const { return topology_; }
  const TrafficProcess& traffic() const { return traffic_; }

  /// t = 1, every AoI = 1, stored packet generation times = 0.
  NetworkState reset() const;

  /// Draws one delivery outcome per attempted transmission (update
  /// attempts first in ascending device order, then sample attempts in
  /// ascending UAV and device order) and applies them.
  StepOutcome step(const NetworkState& state, const JointAction& action,
                   Rng& rng) const;

  /// Deterministic transition under fixed per-device delivery outcomes.
  /// The update leg is applied against the slot-t UAV state before the
  /// sample leg lands, which is what gives the relay its one-slot delay.
  StepOutcome apply(const NetworkState& state, const JointAction& action,
                    std::span<const std::uint8_t> sample_ok,
                    std::span<const std::uint8_t> update_ok) const;

  /// Flat state vector (t, aoi_uav[1..M], aoi_tbs[1..M]) of length 2M+1.
  std::vector<double> observe(const NetworkState& state) const;

 private:
  ScenarioConfig config_;
  Topology topology_;
  TrafficProcess traffic_;
};

/// Accumulated per-episode AoI statistics.
struct EpisodeMetrics {
  std::vector<std::int64_t> per_slot_sum_aoi_uav;
  std::vector<std::int64_t> per_slot_sum_aoi_tbs;
  std::int64_t sum_aoi_uav = 0;
  std::int64_t sum_aoi_tbs = 0;
  std::vector<int> final_aoi_tbs; // state at t = T
  std::vector<std::int64_t> per_slot_reward;

  void record_state(const NetworkState& state, bool final_slot);
  void record_reward(std::int64_t reward);
};

struct MetricsSummary {
  // Per-device cumulative AoI over the horizon (the sum over slots,
  // averaged over devices) and its per-slot normalization.
  double aoi_tbs_total = 0.0;
  double aoi_tbs_per_slot = 0.0;
  double aoi_uav_total = 0.0;
  double aoi_uav_per_slot = 0.0;
  std::vector<int> final_aoi_tbs;
};

/// Throws std::logic_error unless exactly `horizon` slots were recorded.
MetricsSummary finalize_metrics(const EpisodeMetrics& metrics, int num_devices,
                                int horizon);

}  // namespace uavrelay
