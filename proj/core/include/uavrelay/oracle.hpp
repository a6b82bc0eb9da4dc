#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>

#include "uavrelay/actions.hpp"
#include "uavrelay/model.hpp"
#include "uavrelay/schedulers.hpp"

namespace uavrelay {

class OracleBudgetExceeded : public std::runtime_error {
 public:
  OracleBudgetExceeded(std::uint64_t expanded, std::uint64_t budget)
      : std::runtime_error("exact solver exceeded its node budget: expanded " +
                           std::to_string(expanded) + " states of at most " +
                           std::to_string(budget)),
        states_expanded(expanded),
        node_budget(budget) {}
  std::uint64_t states_expanded;
  std::uint64_t node_budget;
};

struct OptimalResult {
  double cost = 0.0;     // expected per-device cumulative AoI at the TBS
  double cost_sum = 0.0; // same, before dividing by M (integer when lossless)
  JointAction root_action;
  std::uint64_t states_expanded = 0;
};

/// Backward induction over the full Markov state with expectation over
/// every Bernoulli delivery outcome of every action. Only feasible on
/// tiny instances; anything past the node budget raises
/// OracleBudgetExceeded. Dyadic loss probabilities (including the
/// lossless case) keep every intermediate value exactly representable,
/// so costs there are exact, not approximate.
OptimalResult optimal_cost(const ScenarioConfig& scenario, const Topology& topo,
                           std::uint64_t node_budget = 10'000'000);

struct PolicyEvalResult {
  double cost = 0.0;
  double cost_sum = 0.0;
  std::uint64_t states_expanded = 0;
};

/// Exact expected cost of a deterministic policy (a pure function of the
/// PolicyView) over the tree of delivery outcomes.
PolicyEvalResult evaluate_policy_exact(
    const ScenarioConfig& scenario, const Topology& topo,
    const std::function<JointAction(const PolicyView&)>& policy,
    std::uint64_t node_budget = 10'000'000);

/// Deterministic round-robin adapter: the cursor at slot t is implied by
/// t because every slot advances it by a fixed amount.
JointAction round_robin_at_slot(const PolicyView& view);

}  // namespace uavrelay
