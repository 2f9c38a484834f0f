#pragma once

#include "kr/epsilon.hpp"
#include "kr/verbalization.hpp"

#include <cstdint>
#include <vector>

namespace kr {

// ---------------------------------------------------------------------------
// Quasirandomness

struct QuasirandomConfig {
  int max_lag = 5;
  double max_cramers_v = 0.2;
  double min_chi_square_p = 0.01;
  double min_entropy_fraction = 0.9;
  friend bool operator==(const QuasirandomConfig&, const QuasirandomConfig&) = default;
};

struct QuasirandomReport {
  int alphabet_size = 0;
  std::size_t length = 0;
  std::vector<double> serial_correlation;  // Cramér's V, lags 1..L
  double chi_square = 0.0;
  int dof = 0;
  double chi_square_p = 1.0;
  std::vector<double> entropy_rate;  // bits/symbol, n = 1..3
  bool serial_ok = false;
  bool uniform_ok = false;
  bool entropy_ok = false;
  bool overall = false;
};

/// Cramér's V of the contingency table of (x_k, y_k); rows or columns
/// with zero marginals are dropped, and V = 0 when fewer than two remain.
double cramers_v(const std::vector<int>& x, const std::vector<int>& y);

/// Plug-in mutual information in bits.
double mutual_information(const std::vector<int>& x, const std::vector<int>& y);

/// Plug-in entropy of overlapping n-grams, in bits.
double block_entropy(const std::vector<int>& symbols, int n);

QuasirandomReport quasirandomness_suite(const std::vector<int>& symbols, int alphabet_size,
                                        const QuasirandomConfig& config = {});

// ---------------------------------------------------------------------------
// Resonance

struct ResonanceConfig {
  int window = 64;
  int n_surrogates = 200;
  int max_lag = 3;
  friend bool operator==(const ResonanceConfig&, const ResonanceConfig&) = default;
};

struct ResonanceReport {
  int window = 0;
  int lag = 0;  // best alignment: v_{n-lag} against ω_n
  std::vector<double> mi_per_window;
  std::vector<double> median_mi_per_lag;
  double statistic = 0.0;  // max over lags of the median window MI
  double null_mean = 0.0;
  double null_p95 = 0.0;
  double p_value = 1.0;
  bool detected = false;
  std::vector<double> phi_conditioned_mi;
  std::vector<double> phi_bin_null_p95;
  bool phi_bins_all_above = false;
};

/// Windowed MI between aligned v and ω with a shuffled-v surrogate null.
/// `phi_summary` holds one scalar per word (may be empty to skip the
/// φ-conditioned check).
ResonanceReport detect_resonance(const std::vector<int>& v, const std::vector<int>& omega,
                                 const std::vector<double>& phi_summary,
                                 const ResonanceConfig& config, std::uint64_t seed);

struct ResonanceRun {
  std::vector<int> v;
  std::vector<int> omega;
  std::vector<double> phi_summary;
};

struct EnsembleReport {
  std::vector<ResonanceReport> runs;
  double detection_rate = 0.0;
};

/// The same check over independent realizations (one per seed of the caller).
EnsembleReport detect_resonance_ensemble(const std::vector<ResonanceRun>& runs,
                                         const ResonanceConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Prediction and betting

struct Prediction {
  int symbol = 0;
  double confidence = 0.0;
  double timescale_ratio = 0.0;
  bool applicable = false;
  Vector forecast_mean;
};

/// Forecast ε one median set duration ahead, average the path and map it
/// through the partition. `trace` is the recovered ε up to the end of the
/// last word in `history`.
Prediction predict_next_word(const WordSequence& history, const EpsilonTrace& trace,
                             const CellPartition& partition, const PredictorConfig& config);

struct BetEntry {
  std::size_t set = 0;
  int predicted = 0;
  int actual = 0;
  double stake = 0.0;
  double payoff = 0.0;
};

struct BetLedger {
  int alphabet_size = 4;
  std::vector<BetEntry> entries;
  double balance = 0.0;

  std::size_t hits() const;
};

/// Payoff stake * (alphabet_size - 1) on a hit, -stake on a miss.
BetLedger settle_bet(BetLedger ledger, std::size_t set, int predicted, int actual, double stake);
void settle_in_place(BetLedger& ledger, std::size_t set, int predicted, int actual, double stake);

}  // namespace kr
