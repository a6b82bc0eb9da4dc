#include "uavrelay/actions.hpp"

#include <algorithm>
#include <sstream>

namespace uavrelay {

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    // result * (n-k+i) is divisible by i at every step
    const std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
    if (result > UINT64_MAX / num)
      throw std::overflow_error("binomial coefficient exceeds 64 bits");
    result = result * num / static_cast<std::uint64_t>(i);
  }
  return result;
}

std::uint64_t combination_rank(const std::vector<int>& combo) {
  std::uint64_t rank = 0;
  for (std::size_t i = 0; i < combo.size(); ++i)
    rank += binomial(combo[i], static_cast<int>(i) + 1);
  return rank;
}

std::vector<int> combination_unrank(std::uint64_t rank, int n, int k) {
  std::vector<int> combo(static_cast<std::size_t>(k));
  int hi = n - 1;
  for (int i = k; i >= 1; --i) {
    // largest v with C(v, i) <= rank
    int v = hi;
    while (binomial(v, i) > rank) --v;
    combo[static_cast<std::size_t>(i - 1)] = v;
    rank -= binomial(v, i);
    hi = v - 1;
  }
  return combo;
}

std::string to_string(const JointAction& action) {
  std::ostringstream out;
  out << "S:[";
  for (std::size_t n = 0; n < action.sample_sets.size(); ++n) {
    if (n > 0) out << '|';
    out << 'u' << (n + 1) << ":(";
    const auto& s = action.sample_sets[n];
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i > 0) out << ',';
      out << (s[i] + 1);
    }
    out << ')';
  }
  out << "];U:(";
  for (std::size_t i = 0; i < action.update_set.size(); ++i) {
    if (i > 0) out << ',';
    out << (action.update_set[i] + 1);
  }
  out << ')';
  return out.str();
}

std::string FeasibilityVerdict::joined() const {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v;
  }
  return out;
}

FeasibilityVerdict check_action(const JointAction& action, const Topology& topo,
                                int sample_channels, int update_channels) {
  FeasibilityVerdict verdict;
  const int n_count = static_cast<int>(topo.devices_of_uav.size());
  const int m_count = static_cast<int>(topo.uav_of_device.size());
  auto complain = [&](std::string msg) { verdict.violations.push_back(std::move(msg)); };

  if (static_cast<int>(action.sample_sets.size()) != n_count) {
    complain("sample sets must list one set per UAV (got " +
             std::to_string(action.sample_sets.size()) + ", expected " +
             std::to_string(n_count) + ")");
    return verdict;
  }
  for (int n = 0; n < n_count; ++n) {
    const auto& s = action.sample_sets[static_cast<std::size_t>(n)];
    if (static_cast<int>(s.size()) > sample_channels)
      complain("sample channel limit exceeded at UAV " + std::to_string(n + 1) +
               ": |S|=" + std::to_string(s.size()) + " > L=" +
               std::to_string(sample_channels));
    for (std::size_t i = 0; i < s.size(); ++i) {
      const int m = s[i];
      if (m < 0 || m >= m_count) {
        complain("sample set of UAV " + std::to_string(n + 1) +
                 " names device " + std::to_string(m + 1) + " outside 1.." +
                 std::to_string(m_count));
        continue;
      }
      if (topo.uav_of_device[static_cast<std::size_t>(m)] != n)
        complain("device " + std::to_string(m + 1) + " is not associated with UAV " +
                 std::to_string(n + 1));
      if (i > 0 && s[i - 1] == m)
        complain("duplicate device " + std::to_string(m + 1) +
                 " in sample set of UAV " + std::to_string(n + 1));
    }
  }
  const auto& u = action.update_set;
  if (static_cast<int>(u.size()) > update_channels)
    complain("update channel limit exceeded: |U|=" + std::to_string(u.size()) +
             " > K=" + std::to_string(update_channels));
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] < 0 || u[i] >= m_count)
      complain("update set names device " + std::to_string(u[i] + 1) +
               " outside 1.." + std::to_string(m_count));
    else if (i > 0 && u[i - 1] == u[i])
      complain("duplicate device " + std::to_string(u[i] + 1) + " in update set");
  }
  return verdict;
}

double ActionSpace::count(const Topology& topo, int sample_channels,
                          int update_channels) {
  const int m_count = static_cast<int>(topo.uav_of_device.size());
  double total = 1.0;
  for (const auto& cell : topo.devices_of_uav) {
    const int size = static_cast<int>(cell.size());
    const int take = std::min(sample_channels, size);
    double c = 1.0;
    for (int i = 1; i <= take; ++i)
      c = c * static_cast<double>(size - take + i) / static_cast<double>(i);
    total *= c;
  }
  const int take_u = std::min(update_channels, m_count);
  double cu = 1.0;
  for (int i = 1; i <= take_u; ++i)
    cu = cu * static_cast<double>(m_count - take_u + i) / static_cast<double>(i);
  return total * cu;
}

ActionSpace::ActionSpace(const Topology& topo, int sample_channels,
                         int update_channels, std::uint64_t cap)
    : cells_(topo.devices_of_uav),
      num_devices_(static_cast<int>(topo.uav_of_device.size())) {
  const auto too_large = [&](double approx) {
    std::ostringstream msg;
    msg << "action space too large: |A| = " << approx << " exceeds cap " << cap;
    throw ActionSpaceTooLarge(msg.str(), approx);
  };
  const double approx = count(topo, sample_channels, update_channels);
  if (approx > static_cast<double>(cap) * 1.0000001) too_large(approx);

  total_ = 1;
  for (const auto& cell : cells_) {
    const int take = std::min(sample_channels, static_cast<int>(cell.size()));
    sample_take_.push_back(take);
    const std::uint64_t c = binomial(static_cast<int>(cell.size()), take);
    sample_count_.push_back(c);
    total_ *= c;
  }
  update_take_ = std::min(update_channels, num_devices_);
  update_count_ = binomial(num_devices_, update_take_);
  total_ *= update_count_;
  if (total_ > cap) too_large(static_cast<double>(total_));
}

JointAction ActionSpace::action_at(std::uint64_t index) const {
  if (index >= total_)
    throw std::out_of_range("action index " + std::to_string(index) +
                            " out of range, |A| = " + std::to_string(total_));
  JointAction action;
  const std::uint64_t update_rank = index % update_count_;
  index /= update_count_;
  std::vector<std::uint64_t> sample_ranks(cells_.size());
  for (std::size_t n = cells_.size(); n-- > 0;) {
    sample_ranks[n] = index % sample_count_[n];
    index /= sample_count_[n];
  }
  action.sample_sets.resize(cells_.size());
  for (std::size_t n = 0; n < cells_.size(); ++n) {
    const auto positions = combination_unrank(
        sample_ranks[n], static_cast<int>(cells_[n].size()), sample_take_[n]);
    auto& set = action.sample_sets[n];
    set.reserve(positions.size());
    for (int pos : positions) set.push_back(cells_[n][static_cast<std::size_t>(pos)]);
  }
  action.update_set = combination_unrank(update_rank, num_devices_, update_take_);
  return action;
}

std::uint64_t ActionSpace::index_of(const JointAction& action) const {
  if (static_cast<int>(action.sample_sets.size()) != num_uavs())
    throw std::invalid_argument("action does not match topology: wrong UAV count");
  std::uint64_t index = 0;
  for (std::size_t n = 0; n < cells_.size(); ++n) {
    const auto& set = action.sample_sets[n];
    if (static_cast<int>(set.size()) != sample_take_[n])
      throw std::invalid_argument(
          "enumerable actions use full sample capacity at every UAV");
    std::vector<int> positions;
    positions.reserve(set.size());
    for (int device : set) {
      const auto it = std::lower_bound(cells_[n].begin(), cells_[n].end(), device);
      if (it == cells_[n].end() || *it != device)
        throw std::invalid_argument("device " + std::to_string(device + 1) +
                                    " not in cell of UAV " + std::to_string(n + 1));
      positions.push_back(static_cast<int>(it - cells_[n].begin()));
    }
    index = index * sample_count_[n] + combination_rank(positions);
  }
  if (static_cast<int>(action.update_set.size()) != update_take_)
    throw std::invalid_argument("enumerable actions use full update capacity");
  for (int device : action.update_set)
    if (device < 0 || device >= num_devices_)
      throw std::invalid_argument("update set device out of range");
  index = index * update_count_ + combination_rank(action.update_set);
  return index;
}

}  // namespace uavrelay
