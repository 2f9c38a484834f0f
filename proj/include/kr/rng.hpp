#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace kr {

/// Seed splitting rule: stream_seed(seed, name) = splitmix64(seed ^ fnv1a64(name)).
/// Every module draws from its own named stream so adding draws in one
/// module never perturbs another.
std::uint64_t fnv1a64(std::string_view text);
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t stream_seed(std::uint64_t seed, std::string_view name);

/// Deterministic generator used everywhere randomness is needed. The
/// bounded draws are implemented here rather than through <random>
/// distributions, whose algorithms differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::string_view stream) : engine_(stream_seed(seed, stream)) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, bound), rejection sampled.
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace kr
