#include "uavrelay/schedulers.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace uavrelay {

PolicyView make_view(const NetworkState& state, const Env& env) {
  PolicyView view;
  view.t = state.t;
  view.aoi_uav = state.aoi_uav;
  view.aoi_tbs = state.aoi_tbs;
  view.topology = &env.topology();
  view.sample_channels = env.config().sample_channels;
  view.update_channels = env.config().update_channels;
  return view;
}

namespace {

// Indices of the k largest values among `candidates`, ties to the lowest
// device index, result sorted ascending.
template <typename ValueOf>
std::vector<int> top_k(const std::vector<int>& candidates, int k, ValueOf value) {
  std::vector<int> order = candidates;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto va = value(a), vb = value(b);
    if (va != vb) return va > vb;
    return a < b;
  });
  order.resize(static_cast<std::size_t>(k));
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<int> all_devices(const Topology& topo) {
  std::vector<int> ids(topo.uav_of_device.size());
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

JointAction sample_by_max_aoi_uav(const PolicyView& view) {
  JointAction action;
  for (const auto& cell : view.topology->devices_of_uav) {
    const int take = std::min<int>(view.sample_channels, static_cast<int>(cell.size()));
    action.sample_sets.push_back(top_k(cell, take, [&](int m) {
      return view.aoi_uav[static_cast<std::size_t>(m)];
    }));
  }
  return action;
}

}  // namespace

JointAction maf_mad(const PolicyView& view) {
  JointAction action = sample_by_max_aoi_uav(view);
  const auto devices = all_devices(*view.topology);
  const int take = std::min<int>(view.update_channels, static_cast<int>(devices.size()));
  action.update_set = top_k(devices, take, [&](int m) {
    return view.aoi_tbs[static_cast<std::size_t>(m)] -
           view.aoi_uav[static_cast<std::size_t>(m)];
  });
  return action;
}

JointAction maf(const PolicyView& view) {
  JointAction action = sample_by_max_aoi_uav(view);
  const auto devices = all_devices(*view.topology);
  const int take = std::min<int>(view.update_channels, static_cast<int>(devices.size()));
  action.update_set = top_k(devices, take, [&](int m) {
    return view.aoi_tbs[static_cast<std::size_t>(m)];
  });
  return action;
}

RrCursor RrCursor::initial(const Topology& topo) {
  RrCursor cursor;
  cursor.sample_pos.assign(topo.devices_of_uav.size(), 0);
  cursor.update_pos = 0;
  return cursor;
}

std::pair<JointAction, RrCursor> round_robin(const PolicyView& view,
                                             const RrCursor& cursor) {
  JointAction action;
  RrCursor next = cursor;
  const auto& cells = view.topology->devices_of_uav;
  for (std::size_t n = 0; n < cells.size(); ++n) {
    const auto& cell = cells[n];
    const int size = static_cast<int>(cell.size());
    if (size == 0) {
      action.sample_sets.emplace_back();
      continue;
    }
    const int take = std::min(view.sample_channels, size);
    std::vector<int> chosen;
    chosen.reserve(static_cast<std::size_t>(take));
    for (int i = 0; i < take; ++i)
      chosen.push_back(cell[static_cast<std::size_t>((cursor.sample_pos[n] + i) % size)]);
    std::sort(chosen.begin(), chosen.end());
    action.sample_sets.push_back(std::move(chosen));
    next.sample_pos[n] = (cursor.sample_pos[n] + take) % size;
  }
  const int m_count = static_cast<int>(view.topology->uav_of_device.size());
  const int take_u = std::min(view.update_channels, m_count);
  for (int i = 0; i < take_u; ++i)
    action.update_set.push_back((cursor.update_pos + i) % m_count);
  std::sort(action.update_set.begin(), action.update_set.end());
  next.update_pos = (cursor.update_pos + take_u) % m_count;
  return {std::move(action), std::move(next)};
}

JointAction random_policy(const PolicyView& view, Rng& rng) {
  JointAction action;
  for (const auto& cell : view.topology->devices_of_uav) {
    const int take = std::min<int>(view.sample_channels, static_cast<int>(cell.size()));
    action.sample_sets.push_back(rng.sample_without_replacement(cell, take));
  }
  const auto devices = all_devices(*view.topology);
  const int take_u = std::min<int>(view.update_channels, static_cast<int>(devices.size()));
  action.update_set = rng.sample_without_replacement(devices, take_u);
  return action;
}

namespace {

class MafMadScheduler final : public Scheduler {
 public:
  std::string_view name() const override { return "maf-mad"; }
  JointAction decide(const PolicyView& view, Rng&) override { return maf_mad(view); }
};

class MafScheduler final : public Scheduler {
 public:
  std::string_view name() const override { return "maf"; }
  JointAction decide(const PolicyView& view, Rng&) override { return maf(view); }
};

class RoundRobinScheduler final : public Scheduler {
 public:
  explicit RoundRobinScheduler(const Topology& topo)
      : initial_(RrCursor::initial(topo)), cursor_(initial_) {}
  std::string_view name() const override { return "rr"; }
  void begin_episode() override { cursor_ = initial_; }
  JointAction decide(const PolicyView& view, Rng&) override {
    auto [action, next] = round_robin(view, cursor_);
    cursor_ = std::move(next);
    return action;
  }

 private:
  RrCursor initial_;
  RrCursor cursor_;
};

class RandomScheduler final : public Scheduler {
 public:
  std::string_view name() const override { return "random"; }
  JointAction decide(const PolicyView& view, Rng& rng) override {
    return random_policy(view, rng);
  }
};

}  // namespace

std::unique_ptr<Scheduler> make_scheduler(const std::string& name,
                                          const Topology& topo) {
  if (name == "maf-mad") return std::make_unique<MafMadScheduler>();
  if (name == "maf") return std::make_unique<MafScheduler>();
  if (name == "rr") return std::make_unique<RoundRobinScheduler>(topo);
  if (name == "random") return std::make_unique<RandomScheduler>();
  throw std::invalid_argument("unknown scheduler '" + name +
                              "' (expected maf-mad | maf | rr | random | dqn)");
}

}  // namespace uavrelay
