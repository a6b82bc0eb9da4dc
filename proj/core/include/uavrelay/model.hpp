#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uavrelay/rng.hpp"

namespace uavrelay {

enum class TrafficModel { GenerateAtWill, Periodic };
enum class AssociationMode { Nearest, ExplicitEqualSplit };

/// Full description of one network scenario. Immutable once validated;
/// everything downstream (topology, episodes, training) derives from it
/// plus a seed.
struct ScenarioConfig {
  int num_devices = 1;     // M
  int num_uavs = 1;        // N
  int sample_channels = 1; // L, per UAV
  int update_channels = 1; // K, at the TBS
  int horizon = 1;         // T, slots per episode

  TrafficModel traffic = TrafficModel::GenerateAtWill;
  std::vector<int> periods; // per device, Periodic only

  // Per-device Bernoulli loss probabilities, each in [0, 1).
  std::vector<double> sample_loss;
  std::vector<double> update_loss;

  double area_width = 1000.0;
  double area_height = 1000.0;
  AssociationMode association = AssociationMode::Nearest;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on any violated invariant.
  void validate() const;

  bool lossless() const;
};

/// Loads a scenario from a JSON config file. Field names match the
/// ScenarioConfig members (num_devices, num_uavs, sample_channels,
/// update_channels, horizon, traffic, periods, sample_loss, update_loss,
/// area, association, seed). Per-device fields accept a scalar
/// (broadcast to all M devices) or an M-length list.
ScenarioConfig load_scenario_file(const std::filesystem::path& path);
ScenarioConfig parse_scenario_json(const std::string& json_text);
std::string scenario_to_json(const ScenarioConfig& config);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Placement and device-to-UAV association. Cells are disjoint, cover
/// all devices, and are sorted ascending.
struct Topology {
  std::vector<Vec2> device_positions;
  std::vector<Vec2> uav_positions;
  Vec2 tbs_position;
  std::vector<int> uav_of_device;               // n_m
  std::vector<std::vector<int>> devices_of_uav; // m_n
};

/// Draws positions uniformly over the area and associates devices:
/// Nearest picks the closest UAV (ties to the lowest UAV index),
/// ExplicitEqualSplit assigns device i to UAV i mod N regardless of
/// geometry, so cells differ in size by at most one.
Topology build_topology(const ScenarioConfig& config, Rng& rng);

/// Packet-generation process of the scenario's devices.
struct TrafficProcess {
  TrafficModel kind = TrafficModel::GenerateAtWill;
  std::vector<int> periods;

  /// Generation time of the newest packet available at device m in slot t.
  /// Generate-at-will devices always have a fresh packet; periodic devices
  /// expose the largest multiple of their period that is <= t, with a
  /// bootstrap packet of generation time 0 before the first period.
  int freshest_gen_time(int device, int t) const {
    if (kind == TrafficModel::GenerateAtWill) return t;
    const int p = periods[static_cast<std::size_t>(device)];
    return (t / p) * p;
  }

  static TrafficProcess from(const ScenarioConfig& config) {
    return TrafficProcess{config.traffic, config.periods};
  }
};

/// One lossy-channel transmission attempt; true means delivered.
inline bool draw_delivery(double loss_prob, Rng& rng) {
  return rng.uniform01() < 1.0 - loss_prob;
}

std::string to_string(TrafficModel m);
std::string to_string(AssociationMode a);

}  // namespace uavrelay
