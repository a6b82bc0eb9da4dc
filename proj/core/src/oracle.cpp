#include "uavrelay/oracle.hpp"

#include <algorithm>
#include <unordered_map>
#include <vector>

namespace uavrelay {

namespace {

// Full Markov state packed flat: [t, aoi_uav.., aoi_tbs.., stored_gen..].
// The periodic phase is a function of t, so nothing else is needed.
using ExactState = std::vector<int>;

struct StateHash {
  std::size_t operator()(const ExactState& s) const {
    std::uint64_t h = 14695981039346656037ull;
    for (int v : s) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

struct Solver {
  const ScenarioConfig& scenario;
  const Topology& topo;
  const std::function<JointAction(const PolicyView&)>* policy; // null: optimize
  std::uint64_t budget;

  int m_count;
  TrafficProcess traffic;
  std::vector<JointAction> actions; // enumerated once when optimizing
  std::unordered_map<ExactState, double, StateHash> memo;
  std::uint64_t expanded = 0;

  Solver(const ScenarioConfig& sc, const Topology& tp,
         const std::function<JointAction(const PolicyView&)>* pol,
         std::uint64_t node_budget)
      : scenario(sc),
        topo(tp),
        policy(pol),
        budget(node_budget),
        m_count(sc.num_devices),
        traffic(TrafficProcess::from(sc)) {
    scenario.validate();
    if (!policy) {
      try {
        // evaluating a state costs at least |A| child expansions, so an
        // action space past the budget can never finish anyway
        ActionSpace space(topo, scenario.sample_channels, scenario.update_channels,
                          budget);
        actions.reserve(space.size());
        for (std::uint64_t i = 0; i < space.size(); ++i)
          actions.push_back(space.action_at(i));
      } catch (const ActionSpaceTooLarge& e) {
        throw OracleBudgetExceeded(
            static_cast<std::uint64_t>(std::min(e.approximate_count, 1e18)),
            budget);
      }
    }
  }

  static ExactState initial(int m_count) {
    ExactState s(static_cast<std::size_t>(1 + 3 * m_count));
    s[0] = 1;
    for (int m = 0; m < m_count; ++m) {
      s[static_cast<std::size_t>(1 + m)] = 1;           // aoi_uav
      s[static_cast<std::size_t>(1 + m_count + m)] = 1; // aoi_tbs
      s[static_cast<std::size_t>(1 + 2 * m_count + m)] = 0;
    }
    return s;
  }

  int slot(const ExactState& s) const { return s[0]; }
  int aoi_uav(const ExactState& s, int m) const {
    return s[static_cast<std::size_t>(1 + m)];
  }
  int aoi_tbs(const ExactState& s, int m) const {
    return s[static_cast<std::size_t>(1 + m_count + m)];
  }

  // Deterministic one-slot transition for a fixed outcome bitmask over
  // the action's attempts: update attempts first (ascending device),
  // then sample attempts (ascending UAV, ascending device). The update
  // leg reads the slot-t UAV state, the sample leg lands afterwards.
  ExactState transition(const ExactState& s, const JointAction& action,
                        std::uint32_t outcome_bits) const {
    const int t = s[0];
    ExactState next = s;
    next[0] = t + 1;
    int bit = 0;
    for (int m = 0; m < m_count; ++m) {
      next[static_cast<std::size_t>(1 + m)] += 1;
      next[static_cast<std::size_t>(1 + m_count + m)] += 1;
    }
    for (int device : action.update_set) {
      const bool ok = (outcome_bits >> bit++) & 1u;
      if (ok)
        next[static_cast<std::size_t>(1 + m_count + device)] =
            s[static_cast<std::size_t>(1 + device)] + 1;
    }
    for (const auto& set : action.sample_sets) {
      for (int device : set) {
        const bool ok = (outcome_bits >> bit++) & 1u;
        if (!ok) continue;
        auto& gen = next[static_cast<std::size_t>(1 + 2 * m_count + device)];
        gen = std::max(gen, traffic.freshest_gen_time(device, t));
        next[static_cast<std::size_t>(1 + device)] = (t + 1) - gen;
      }
    }
    return next;
  }

  // Expected continuation value of one action: sum over all delivery
  // outcome combinations, skipping zero-probability branches.
  double expected_value(const ExactState& s, const JointAction& action) {
    std::vector<double> success_probs;
    for (int device : action.update_set)
      success_probs.push_back(
          1.0 - scenario.update_loss[static_cast<std::size_t>(device)]);
    for (const auto& set : action.sample_sets)
      for (int device : set)
        success_probs.push_back(
            1.0 - scenario.sample_loss[static_cast<std::size_t>(device)]);

    const int attempts = static_cast<int>(success_probs.size());
    if (attempts > 20) // 2^attempts branches per action; way past any budget
      throw OracleBudgetExceeded(expanded + (1ull << 20), budget);
    double total = 0.0;
    for (std::uint32_t bits = 0; bits < (1u << attempts); ++bits) {
      double weight = 1.0;
      for (int i = 0; i < attempts && weight > 0.0; ++i) {
        const bool ok = (bits >> i) & 1u;
        weight *= ok ? success_probs[static_cast<std::size_t>(i)]
                     : 1.0 - success_probs[static_cast<std::size_t>(i)];
      }
      if (weight == 0.0) continue;
      total += weight * value(transition(s, action, bits));
    }
    return total;
  }

  // Expected remaining cost in sum units: sum over slots t..T of
  // sum_m aoi_tbs, given optimal (or policy) play.
  double value(const ExactState& s) {
    if (slot(s) > scenario.horizon) return 0.0;
    const auto found = memo.find(s);
    if (found != memo.end()) return found->second;
    if (++expanded > budget) throw OracleBudgetExceeded(expanded, budget);

    double stage = 0.0;
    for (int m = 0; m < m_count; ++m) stage += aoi_tbs(s, m);

    double best;
    if (policy) {
      best = expected_value(s, policy_action(s));
    } else {
      best = expected_value(s, actions[0]);
      for (std::size_t i = 1; i < actions.size(); ++i)
        best = std::min(best, expected_value(s, actions[i]));
    }
    const double v = stage + best;
    memo.emplace(s, v);
    return v;
  }

  JointAction policy_action(const ExactState& s) const {
    PolicyView view;
    view.t = slot(s);
    view.aoi_uav = std::span<const int>(s.data() + 1, static_cast<std::size_t>(m_count));
    view.aoi_tbs =
        std::span<const int>(s.data() + 1 + m_count, static_cast<std::size_t>(m_count));
    view.topology = &topo;
    view.sample_channels = scenario.sample_channels;
    view.update_channels = scenario.update_channels;
    return (*policy)(view);
  }
};

}  // namespace

OptimalResult optimal_cost(const ScenarioConfig& scenario, const Topology& topo,
                           std::uint64_t node_budget) {
  Solver solver(scenario, topo, nullptr, node_budget);
  const ExactState root = Solver::initial(scenario.num_devices);

  // Root expansion picks the action as well as the value; ties keep the
  // lowest enumeration index for reproducibility.
  double stage = 0.0;
  for (int m = 0; m < scenario.num_devices; ++m) stage += solver.aoi_tbs(root, m);
  double best = solver.expected_value(root, solver.actions[0]);
  std::size_t best_index = 0;
  for (std::size_t i = 1; i < solver.actions.size(); ++i) {
    const double v = solver.expected_value(root, solver.actions[i]);
    if (v < best) {
      best = v;
      best_index = i;
    }
  }
  OptimalResult result;
  result.cost_sum = stage + best;
  result.cost = result.cost_sum / scenario.num_devices;
  result.root_action = solver.actions[best_index];
  result.states_expanded = solver.expanded + 1;
  return result;
}

PolicyEvalResult evaluate_policy_exact(
    const ScenarioConfig& scenario, const Topology& topo,
    const std::function<JointAction(const PolicyView&)>& policy,
    std::uint64_t node_budget) {
  Solver solver(scenario, topo, &policy, node_budget);
  PolicyEvalResult result;
  result.cost_sum = solver.value(Solver::initial(scenario.num_devices));
  result.cost = result.cost_sum / scenario.num_devices;
  result.states_expanded = solver.expanded;
  return result;
}

JointAction round_robin_at_slot(const PolicyView& view) {
  RrCursor cursor = RrCursor::initial(*view.topology);
  const auto& cells = view.topology->devices_of_uav;
  for (std::size_t n = 0; n < cells.size(); ++n) {
    const int size = static_cast<int>(cells[n].size());
    if (size == 0) continue;
    const int take = std::min(view.sample_channels, size);
    cursor.sample_pos[n] =
        static_cast<int>((static_cast<long long>(view.t - 1) * take) % size);
  }
  const int m_count = static_cast<int>(view.topology->uav_of_device.size());
  const int take_u = std::min(view.update_channels, m_count);
  cursor.update_pos =
      static_cast<int>((static_cast<long long>(view.t - 1) * take_u) % m_count);
  return round_robin(view, cursor).first;
}

}  // namespace uavrelay
