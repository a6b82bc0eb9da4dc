#include "uavrelay/model.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace uavrelay {

using nlohmann::json;

void ScenarioConfig::validate() const {
  const auto fail = [](const std::string& msg) {
    throw std::invalid_argument("scenario config: " + msg);
  };
  if (num_devices < 1) fail("num_devices must be >= 1");
  if (num_uavs < 1) fail("num_uavs must be >= 1");
  if (sample_channels < 1) fail("sample_channels must be >= 1");
  if (update_channels < 1) fail("update_channels must be >= 1");
  if (horizon < 1) fail("horizon must be >= 1");
  if (traffic == TrafficModel::Periodic) {
    if (static_cast<int>(periods.size()) != num_devices)
      fail("periods must list one entry per device");
    for (int p : periods)
      if (p < 1) fail("each period must be >= 1");
  }
  if (static_cast<int>(sample_loss.size()) != num_devices)
    fail("sample_loss must list one entry per device");
  if (static_cast<int>(update_loss.size()) != num_devices)
    fail("update_loss must list one entry per device");
  for (double l : sample_loss)
    if (!(l >= 0.0 && l < 1.0)) fail("sample_loss entries must be in [0,1)");
  for (double l : update_loss)
    if (!(l >= 0.0 && l < 1.0)) fail("update_loss entries must be in [0,1)");
  if (!(area_width > 0.0) || !(area_height > 0.0))
    fail("area side lengths must be positive");
}

bool ScenarioConfig::lossless() const {
  for (double l : sample_loss)
    if (l != 0.0) return false;
  for (double l : update_loss)
    if (l != 0.0) return false;
  return true;
}

Topology build_topology(const ScenarioConfig& config, Rng& rng) {
  config.validate();
  const int m_count = config.num_devices;
  const int n_count = config.num_uavs;

  Topology topo;
  topo.device_positions.resize(static_cast<std::size_t>(m_count));
  topo.uav_positions.resize(static_cast<std::size_t>(n_count));
  const auto draw_point = [&] {
    Vec2 p;
    p.x = rng.uniform01() * config.area_width;
    p.y = rng.uniform01() * config.area_height;
    return p;
  };
  for (auto& p : topo.device_positions) p = draw_point();
  for (auto& p : topo.uav_positions) p = draw_point();
  topo.tbs_position = draw_point();

  topo.uav_of_device.resize(static_cast<std::size_t>(m_count));
  topo.devices_of_uav.assign(static_cast<std::size_t>(n_count), {});
  for (int m = 0; m < m_count; ++m) {
    int chosen = 0;
    if (config.association == AssociationMode::ExplicitEqualSplit) {
      chosen = m % n_count;
    } else {
      double best = std::numeric_limits<double>::infinity();
      for (int n = 0; n < n_count; ++n) {
        const double dx = topo.device_positions[static_cast<std::size_t>(m)].x -
                          topo.uav_positions[static_cast<std::size_t>(n)].x;
        const double dy = topo.device_positions[static_cast<std::size_t>(m)].y -
                          topo.uav_positions[static_cast<std::size_t>(n)].y;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best) { // strict: ties stay with the lowest index
          best = d2;
          chosen = n;
        }
      }
    }
    topo.uav_of_device[static_cast<std::size_t>(m)] = chosen;
    topo.devices_of_uav[static_cast<std::size_t>(chosen)].push_back(m);
  }
  return topo;
}

std::string to_string(TrafficModel m) {
  return m == TrafficModel::GenerateAtWill ? "generate_at_will" : "periodic";
}

std::string to_string(AssociationMode a) {
  return a == AssociationMode::Nearest ? "nearest" : "explicit_equal_split";
}

namespace {

std::string canon(std::string s) {
  std::string out;
  for (char c : s)
    if (c != '_' && c != '-')
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

TrafficModel parse_traffic(const std::string& s) {
  const std::string c = canon(s);
  if (c == "generateatwill") return TrafficModel::GenerateAtWill;
  if (c == "periodic") return TrafficModel::Periodic;
  throw std::invalid_argument("scenario config: unknown traffic model '" + s + "'");
}

AssociationMode parse_association(const std::string& s) {
  const std::string c = canon(s);
  if (c == "nearest") return AssociationMode::Nearest;
  if (c == "explicitequalsplit") return AssociationMode::ExplicitEqualSplit;
  throw std::invalid_argument("scenario config: unknown association mode '" + s + "'");
}

// Scalar broadcast or M-length list.
template <typename T>
std::vector<T> per_device(const json& v, int m_count, const char* field) {
  std::vector<T> out;
  if (v.is_array()) {
    if (static_cast<int>(v.size()) != m_count)
      throw std::invalid_argument(std::string("scenario config: ") + field +
                                  " list must have one entry per device");
    for (const auto& e : v) out.push_back(e.get<T>());
  } else {
    out.assign(static_cast<std::size_t>(m_count), v.get<T>());
  }
  return out;
}

}  // namespace

ScenarioConfig parse_scenario_json(const std::string& json_text) {
  json j = json::parse(json_text);
  ScenarioConfig cfg;
  cfg.num_devices = j.at("num_devices").get<int>();
  cfg.num_uavs = j.at("num_uavs").get<int>();
  cfg.sample_channels = j.at("sample_channels").get<int>();
  cfg.update_channels = j.at("update_channels").get<int>();
  cfg.horizon = j.at("horizon").get<int>();
  cfg.traffic = parse_traffic(j.at("traffic").get<std::string>());
  if (cfg.traffic == TrafficModel::Periodic)
    cfg.periods = per_device<int>(j.at("periods"), cfg.num_devices, "periods");
  cfg.sample_loss =
      per_device<double>(j.value("sample_loss", json(0.0)), cfg.num_devices, "sample_loss");
  cfg.update_loss =
      per_device<double>(j.value("update_loss", json(0.0)), cfg.num_devices, "update_loss");
  if (j.contains("area")) {
    const auto& a = j.at("area");
    if (a.is_array()) {
      if (a.size() != 2)
        throw std::invalid_argument("scenario config: area must be a scalar or [width, height]");
      cfg.area_width = a[0].get<double>();
      cfg.area_height = a[1].get<double>();
    } else {
      cfg.area_width = cfg.area_height = a.get<double>();
    }
  }
  if (j.contains("association"))
    cfg.association = parse_association(j.at("association").get<std::string>());
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_json(ss.str());
}

std::string scenario_to_json(const ScenarioConfig& config) {
  json j;
  j["num_devices"] = config.num_devices;
  j["num_uavs"] = config.num_uavs;
  j["sample_channels"] = config.sample_channels;
  j["update_channels"] = config.update_channels;
  j["horizon"] = config.horizon;
  j["traffic"] = to_string(config.traffic);
  if (config.traffic == TrafficModel::Periodic) j["periods"] = config.periods;
  j["sample_loss"] = config.sample_loss;
  j["update_loss"] = config.update_loss;
  j["area"] = {config.area_width, config.area_height};
  j["association"] = to_string(config.association);
  j["seed"] = config.seed;
  return j.dump(2);
}

}  // namespace uavrelay
