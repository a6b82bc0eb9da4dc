#include "uavrelay/env.hpp"

#include <numeric>
#include <ostream>
#include <stdexcept>

#include "uavrelay/csv.hpp"

namespace uavrelay {

Env::Env(ScenarioConfig config, Topology topology)
    : config_(std::move(config)),
      topology_(std::move(topology)),
      traffic_(TrafficProcess::from(config_)) {
  config_.validate();
}

NetworkState Env::reset() const {
  NetworkState s;
  s.t = 1;
  const auto m = static_cast<std::size_t>(config_.num_devices);
  s.aoi_uav.assign(m, 1);
  s.aoi_tbs.assign(m, 1);
  s.stored_gen.assign(m, 0);
  return s;
}

StepOutcome Env::step(const NetworkState& state, const JointAction& action,
                      Rng& rng) const {
  const auto m = static_cast<std::size_t>(config_.num_devices);
  std::vector<std::uint8_t> sample_ok(m, 0), update_ok(m, 0);
  for (int device : action.update_set)
    update_ok[static_cast<std::size_t>(device)] =
        draw_delivery(config_.update_loss[static_cast<std::size_t>(device)], rng);
  for (const auto& set : action.sample_sets)
    for (int device : set)
      sample_ok[static_cast<std::size_t>(device)] =
          draw_delivery(config_.sample_loss[static_cast<std::size_t>(device)], rng);
  return apply(state, action, sample_ok, update_ok);
}

StepOutcome Env::apply(const NetworkState& state, const JointAction& action,
                       std::span<const std::uint8_t> sample_ok,
                       std::span<const std::uint8_t> update_ok) const {
  const auto verdict =
      check_action(action, topology_, config_.sample_channels, config_.update_channels);
  if (!verdict.ok()) throw InfeasibleActionError(verdict);

  const int m_count = config_.num_devices;
  const int t = state.t;
  StepOutcome out;
  out.next = state;
  out.next.t = t + 1;
  out.sample_delivered.assign(static_cast<std::size_t>(m_count), 0);
  out.update_delivered.assign(static_cast<std::size_t>(m_count), 0);

  // Update leg, evaluated against the slot-t UAV state (pre-sample).
  for (auto& a : out.next.aoi_tbs) a += 1;
  for (int device : action.update_set) {
    const auto d = static_cast<std::size_t>(device);
    if (update_ok[d]) {
      out.next.aoi_tbs[d] = state.aoi_uav[d] + 1;
      out.update_delivered[d] = 1;
    }
  }

  // Sample leg. A delivered sample carries the freshest generated packet,
  // which never regresses the one already stored at the UAV.
  for (auto& a : out.next.aoi_uav) a += 1;
  for (const auto& set : action.sample_sets) {
    for (int device : set) {
      const auto d = static_cast<std::size_t>(device);
      if (!sample_ok[d]) continue;
      out.sample_delivered[d] = 1;
      const int fresh = traffic_.freshest_gen_time(device, t);
      out.next.stored_gen[d] = std::max(state.stored_gen[d], fresh);
      out.next.aoi_uav[d] = (t + 1) - out.next.stored_gen[d];
    }
  }

  out.reward = 0;
  for (int a : out.next.aoi_tbs) out.reward -= a;
  return out;
}

std::vector<double> Env::observe(const NetworkState& state) const {
  std::vector<double> x;
  x.reserve(1 + 2 * state.aoi_uav.size());
  x.push_back(static_cast<double>(state.t));
  for (int a : state.aoi_uav) x.push_back(static_cast<double>(a));
  for (int a : state.aoi_tbs) x.push_back(static_cast<double>(a));
  return x;
}

void EpisodeMetrics::record_state(const NetworkState& state, bool final_slot) {
  std::int64_t uav = 0, tbs = 0;
  for (int a : state.aoi_uav) uav += a;
  for (int a : state.aoi_tbs) tbs += a;
  per_slot_sum_aoi_uav.push_back(uav);
  per_slot_sum_aoi_tbs.push_back(tbs);
  sum_aoi_uav += uav;
  sum_aoi_tbs += tbs;
  if (final_slot) final_aoi_tbs = state.aoi_tbs;
}

void EpisodeMetrics::record_reward(std::int64_t reward) {
  per_slot_reward.push_back(reward);
}

MetricsSummary finalize_metrics(const EpisodeMetrics& metrics, int num_devices,
                                int horizon) {
  if (static_cast<int>(metrics.per_slot_sum_aoi_tbs.size()) != horizon ||
      static_cast<int>(metrics.per_slot_sum_aoi_uav.size()) != horizon)
    throw std::logic_error("episode incomplete: " +
                           std::to_string(metrics.per_slot_sum_aoi_tbs.size()) +
                           " of " + std::to_string(horizon) + " slots recorded");
  MetricsSummary s;
  const double m = static_cast<double>(num_devices);
  const double t = static_cast<double>(horizon);
  s.aoi_tbs_total = static_cast<double>(metrics.sum_aoi_tbs) / m;
  s.aoi_uav_total = static_cast<double>(metrics.sum_aoi_uav) / m;
  s.aoi_tbs_per_slot = s.aoi_tbs_total / t;
  s.aoi_uav_per_slot = s.aoi_uav_total / t;
  s.final_aoi_tbs = metrics.final_aoi_tbs;
  return s;
}

namespace {

std::string delivered_sets(const JointAction& action, const StepOutcome& outcome) {
  JointAction delivered;
  delivered.sample_sets.resize(action.sample_sets.size());
  for (std::size_t n = 0; n < action.sample_sets.size(); ++n)
    for (int device : action.sample_sets[n])
      if (outcome.sample_delivered[static_cast<std::size_t>(device)])
        delivered.sample_sets[n].push_back(device);
  for (int device : action.update_set)
    if (outcome.update_delivered[static_cast<std::size_t>(device)])
      delivered.update_set.push_back(device);
  return to_string(delivered);
}

}  // namespace

TraceWriter::TraceWriter(std::ostream& out, int num_devices) : out_(out) {
  out_ << "t,action,deliveries";
  for (int m = 1; m <= num_devices; ++m) out_ << ",aoi_uav_" << m;
  for (int m = 1; m <= num_devices; ++m) out_ << ",aoi_tbs_" << m;
  out_ << ",reward\n";
}

void TraceWriter::record(const NetworkState& pre, const JointAction& action,
                         const StepOutcome& outcome) {
  out_ << pre.t << ',';
  write_csv_field(out_, to_string(action));
  out_ << ',';
  write_csv_field(out_, delivered_sets(action, outcome));
  for (int a : pre.aoi_uav) out_ << ',' << a;
  for (int a : pre.aoi_tbs) out_ << ',' << a;
  out_ << ',' << outcome.reward << '\n';
}

}  // namespace uavrelay
