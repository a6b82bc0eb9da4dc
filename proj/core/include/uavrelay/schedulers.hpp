#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "uavrelay/actions.hpp"
#include "uavrelay/env.hpp"
#include "uavrelay/model.hpp"
#include "uavrelay/rng.hpp"

namespace uavrelay {

/// What a scheduler is allowed to see: AoI at both hops, the topology
/// and channel counts. Deliberately excludes generation instants and
/// loss probabilities.
struct PolicyView {
  int t = 1;
  std::span<const int> aoi_uav;
  std::span<const int> aoi_tbs;
  const Topology* topology = nullptr;
  int sample_channels = 1; // L
  int update_channels = 1; // K
};

PolicyView make_view(const NetworkState& state, const Env& env);

/// Sampling: per UAV, the min(L,|m_n|) devices with largest AoI at the
/// UAV. Updating: the min(K,M) devices with largest aoi_tbs - aoi_uav.
/// Ties break to the lowest device index.
JointAction maf_mad(const PolicyView& view);

/// Same sampling leg; the update leg picks the largest aoi_tbs instead.
JointAction maf(const PolicyView& view);

struct RrCursor {
  std::vector<int> sample_pos; // position within each UAV's cell
  int update_pos = 0;          // position within 0..M-1

  static RrCursor initial(const Topology& topo);
};

/// Cyclic selection: each UAV samples the next min(L,|m_n|) devices of
/// its cell from its pointer, the TBS updates the next min(K,M) devices
/// globally; pointers advance by the number taken.
std::pair<JointAction, RrCursor> round_robin(const PolicyView& view,
                                             const RrCursor& cursor);

/// Uniform choice without replacement at both legs, full capacity.
JointAction random_policy(const PolicyView& view, Rng& rng);

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual std::string_view name() const = 0;
  virtual void begin_episode() {}
  virtual JointAction decide(const PolicyView& view, Rng& rng) = 0;
};

/// Baseline scheduler by CLI name: maf-mad | maf | rr | random.
/// The dqn policy is constructed separately from a checkpoint.
std::unique_ptr<Scheduler> make_scheduler(const std::string& name,
                                          const Topology& topo);

}  // namespace uavrelay
