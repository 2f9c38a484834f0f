#pragma once

#include "kr/dynamics.hpp"
#include "kr/epsilon.hpp"
#include "kr/verbalization.hpp"

#include <functional>
#include <string>
#include <vector>

namespace kr {

/// Finishing rule of a set. It sees only the current φ and the word that
/// was current when the set began (both its index/symbol and raw value).
using Predicate = std::function<bool(const Vector& phi, const Word& omega_start)>;

struct PredicateSpec {
  std::string id = "wheel-sector";
  Params params;
  friend bool operator==(const PredicateSpec&, const PredicateSpec&) = default;
};

/// "always", "never", "norm-exceeds" (threshold), "wheel-sector" (sectors):
/// wheel-sector ends the set once the angle of (φ_1, φ_2) enters sector
/// (n + 1) mod sectors, n being the index of the set-start word.
std::vector<std::string> known_predicates();
Predicate make_predicate(const PredicateSpec& spec);

enum class FinishingReason { predicate, horizon };
std::string to_string(FinishingReason reason);

struct Position {
  Vector phi;
  Vector xi;
};

struct SetRecord {
  std::size_t index = 0;
  double t_begin = 0.0;
  double t_end = 0.0;
  std::size_t sample_begin = 0;
  std::size_t sample_end = 0;
  Position start;
  Position end;
  Word omega_at_start;
  FinishingReason finishing_reason = FinishingReason::predicate;
  /// Interval mean of φ_1, the scalar φ summary used by the resonance check.
  double phi_summary = 0.0;
};

struct EngineConfig {
  GameDefinition game;
  std::vector<PolicySpec> policies;
  double dt = 0.01;
  std::uint64_t seed = 0;
  CellPartition omega_partition;
  CellPartition control_partition;
  PredicateSpec predicate;
  double max_duration = 5.0;
};

struct MatchResult {
  std::vector<SetRecord> sets;
  WordSequence words;
};

/// Multistage engine: each set continues from the final position of the
/// previous one and ends by the predicate or after max_duration.
class PerceptionEngine {
 public:
  explicit PerceptionEngine(EngineConfig config);

  /// Called before each set runs, after its policies began; may replace
  /// policies or set held controls.
  using SetHook = std::function<void(std::size_t set_index, PerceptionEngine& engine)>;

  SetRecord run_set();
  SetRecord run_set(const PredicateSpec& predicate, double max_duration);
  MatchResult run_match(std::size_t n_sets, const SetHook& before_set = {});

  const EngineConfig& config() const { return config_; }
  PolicySet& policies() { return sim_.policies(); }
  const Trajectory& trajectory() const { return sim_.trajectory(); }
  const std::vector<SetRecord>& sets() const { return sets_; }
  const WordSequence& words() const { return words_; }
  /// Word current at the start of the next set (n = 0 before any set).
  const Word& current_word() const { return current_word_; }
  std::size_t next_set_index() const { return sets_.size(); }

  /// The most recent `count` samples of the recovered ε (all if count <= 0).
  EpsilonTrace recovered_tail(Eigen::Index count = 0) const;
  Eigen::Index recovered_size() const { return rows_; }

 private:
  SetRecord run_set_impl(const Predicate& predicate, double max_duration, const SetHook* hook);
  void recover_last();

  EngineConfig config_;
  Simulator sim_;
  Matrix recovered_;
  Eigen::Index rows_ = 0;
  std::vector<SetRecord> sets_;
  WordSequence words_;
  Word current_word_;
};

}  // namespace kr
