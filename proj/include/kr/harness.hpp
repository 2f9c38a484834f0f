#pragma once

#include "kr/dynamics.hpp"
#include "kr/io.hpp"
#include "kr/roulette.hpp"
#include "kr/stages.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace kr {

/// Everything an experiment needs. Player indices are 0-based here and
/// 1-based in the JSON form.
struct ScenarioConfig {
  std::string scenario = "KR-1";
  std::uint64_t seed = 0;
  double dt = 0.01;
  int n_sets = 200;
  /// Fixed horizon and set clock for plain simulation (`kr simulate`).
  double horizon = 100.0;
  double set_length = 1.0;
  double max_set_duration = 5.0;
  int alphabet_size = 4;

  std::string phi_rhs = "kaleidoscope";
  Params phi_params;
  std::string xi_rhs = "relaxation";
  Params xi_params;
  CouplingSpec coupling;
  HiddenBehaviorSpec hidden;
  std::vector<PolicySpec> policies;
  PredicateSpec predicate;
  CellPartition omega_partition;
  CellPartition control_partition;

  PredictorConfig predictor;
  /// Recovered samples handed to the predictor before each bet.
  int predictor_history = 2000;
  ResonanceConfig resonance;
  QuasirandomConfig quasirandom;

  double stake = 1.0;
  double credit_limit = 100.0;
  double control_min = -1.0;
  double control_max = 1.0;

  std::optional<std::string> output_dir;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

std::vector<std::string> known_scenarios();

/// Preset for a scenario id (seed 0).
ScenarioConfig scenario_defaults(const std::string& scenario);

/// Parse and validate; keys missing from the document take the preset's
/// value. Unknown keys and ids are rejected.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig config_from_json(const Json& j);
ScenarioConfig load_config(const std::filesystem::path& path);
Json emit_config(const ScenarioConfig& config);

void validate(const ScenarioConfig& config);

GameDefinition build_game(const ScenarioConfig& config);
EngineConfig engine_config(const ScenarioConfig& config);

/// ε visible to a bettor before the next set: bets close one step before
/// the set boundary, so the boundary sample (shared by the trapezoid
/// means of both adjacent sets) is withheld. At most `history` samples.
EpsilonTrace betting_trace(const PerceptionEngine& engine, int history);

struct RouletteRun {
  MatchResult match;
  BetLedger ledger;
  std::vector<std::size_t> bet_sets;
  std::vector<Prediction> predictions;
};

/// Plays n_sets with the predictor betting `stake` on every set once
/// enough history exists.
RouletteRun play_roulette(PerceptionEngine& engine, const ScenarioConfig& config);

struct ExperimentResult {
  RouletteRun run;
  EpsilonTrace recovered;
  QuasirandomReport quasirandom;
  ResonanceReport resonance;
  double timescale_ratio = 0.0;
  Json manifest;
};

/// Full pipeline; writes its artifacts and manifest.json into `out_dir`.
ExperimentResult run_experiment(const ScenarioConfig& config, const std::filesystem::path& out_dir,
                                bool reveal_hidden = false);

/// Narrower commands used by the CLI. Each writes its files plus a manifest.
void run_simulate(const ScenarioConfig& config, const std::filesystem::path& out_dir,
                  bool reveal_hidden);
void run_verbalize(const ScenarioConfig& config, const std::filesystem::path& out_dir,
                   bool reveal_hidden);
void run_resonance(const ScenarioConfig& config, const std::filesystem::path& out_dir);
void run_bet(const ScenarioConfig& config, const std::filesystem::path& out_dir);

/// {code, field?, message}
Json error_json(const std::exception& e);

}  // namespace kr
