#include "kr/common.hpp"
#include "kr/rng.hpp"

#include <cmath>
#include <sstream>

namespace kr {

double param_or(const Params& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

namespace {
std::string diverged_message(std::size_t index, double t) {
  std::ostringstream os;
  os << "integration diverged: state component " << index << " is not finite at t=" << t;
  return os.str();
}

std::string coupling_message(std::size_t sample, int player, int component) {
  std::ostringstream os;
  os << "non-invertible coupling at sample " << sample << " (player " << player + 1
     << ", component " << component + 1 << ")";
  return os.str();
}
}  // namespace

IntegrationDiverged::IntegrationDiverged(std::size_t index, double t)
    : Error("integration_diverged", diverged_message(index, t)), index_(index), t_(t) {}

NonInvertibleCoupling::NonInvertibleCoupling(std::size_t sample, int player, int component)
    : Error("non_invertible_coupling", coupling_message(sample, player, component)),
      sample_(sample) {}

bool all_finite(const Vector& v) { return v.allFinite(); }

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::string_view name) {
  return splitmix64(seed ^ fnv1a64(name));
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % bound;
}

}  // namespace kr
