#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace uavrelay {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed for an auxiliary stream (policy draws, evaluation rollouts, ...)
/// derived from a base seed. Streams with distinct ids never collide.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream_id) {
  return splitmix64(base + 0x9E3779B97F4A7C15ull * (stream_id + 1));
}

/// Seeded random stream. All draws are implemented on top of the raw
/// mt19937_64 output so sequences are identical across standard libraries
/// (std::uniform_*_distribution makes no such guarantee).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [lo, hi], inclusive. Unbiased via rejection.
  int uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = (UINT64_MAX / span) * span;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return lo + static_cast<int>(x % span);
  }

  /// True with probability p.
  bool bernoulli(double p) { return uniform01() < p; }

  /// k distinct elements of pool, returned sorted ascending.
  std::vector<int> sample_without_replacement(const std::vector<int>& pool,
                                              int k);

 private:
  std::mt19937_64 engine_;
};

inline std::vector<int> Rng::sample_without_replacement(
    const std::vector<int>& pool, int k) {
  std::vector<int> scratch = pool;
  const int n = static_cast<int>(scratch.size());
  for (int i = 0; i < k; ++i) {
    const int j = uniform_int(i, n - 1);
    std::swap(scratch[static_cast<std::size_t>(i)],
              scratch[static_cast<std::size_t>(j)]);
  }
  scratch.resize(static_cast<std::size_t>(k));
  std::sort(scratch.begin(), scratch.end());
  return scratch;
}

}  // namespace uavrelay
