#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavrelay/model.hpp"

namespace uavrelay {

/// One slot's decision: per-UAV sample sets S_n and the global update
/// set U. Device indices are 0-based internally and each set is sorted
/// ascending. Enumerated actions always use full channel capacity
/// (|S_n| = min(L, |m_n|), |U| = min(K, M)); the environment also
/// accepts smaller sets since capacity constraints are upper bounds.
struct JointAction {
  std::vector<std::vector<int>> sample_sets;
  std::vector<int> update_set;

  bool operator==(const JointAction&) const = default;
};

/// Trace form: S:[u1:(1,3)|u2:(2)];U:(1,2) with 1-based indices.
std::string to_string(const JointAction& action);

struct FeasibilityVerdict {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
  std::string joined() const;
};

/// Checks every channel-capacity and membership constraint and reports
/// all violations, not just the first.
FeasibilityVerdict check_action(const JointAction& action, const Topology& topo,
                                int sample_channels, int update_channels);

class ActionSpaceTooLarge : public std::runtime_error {
 public:
  ActionSpaceTooLarge(std::string msg, double approx_count)
      : std::runtime_error(std::move(msg)), approximate_count(approx_count) {}
  double approximate_count;
};

/// Canonical bijection between {0 .. |A|-1} and full-capacity joint
/// actions. The index is mixed-radix over (S_1 rank, ..., S_N rank,
/// U rank) with the update rank varying fastest; combination ranks are
/// colexicographic, so rank/unrank run in O(set size) without tables.
class ActionSpace {
 public:
  ActionSpace(const Topology& topo, int sample_channels, int update_channels,
              std::uint64_t cap = kDefaultCap);

  static constexpr std::uint64_t kDefaultCap = 1'000'000;

  std::uint64_t size() const { return total_; }
  int num_uavs() const { return static_cast<int>(cells_.size()); }
  int num_devices() const { return num_devices_; }

  JointAction action_at(std::uint64_t index) const;
  std::uint64_t index_of(const JointAction& action) const;

  /// Closed-form |A| for a topology without building the space;
  /// saturates at the double range on overflow.
  static double count(const Topology& topo, int sample_channels,
                      int update_channels);

 private:
  std::vector<std::vector<int>> cells_;
  int num_devices_ = 0;
  std::vector<int> sample_take_;           // min(L, |m_n|) per UAV
  int update_take_ = 0;                    // min(K, M)
  std::vector<std::uint64_t> sample_count_; // C(|m_n|, take_n)
  std::uint64_t update_count_ = 0;
  std::uint64_t total_ = 0;
};

/// C(n, k) in unsigned 64-bit arithmetic; throws std::overflow_error if
/// the value does not fit.
std::uint64_t binomial(int n, int k);

/// Colexicographic rank of a sorted k-subset of {0..n-1}, and its inverse.
std::uint64_t combination_rank(const std::vector<int>& combo);
std::vector<int> combination_unrank(std::uint64_t rank, int n, int k);

}  // namespace uavrelay
