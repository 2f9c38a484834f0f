#pragma once

#include "kr/dynamics.hpp"

#include <limits>
#include <string>
#include <vector>

namespace kr {

/// ε over time, one row per sample, columns ordered (player, component).
struct EpsilonTrace {
  enum class Provenance { recovered, ground_truth_oracle };

  double dt = 0.0;
  Vector t;
  Matrix values;
  int n_players = 0;
  int component_dim = 0;
  Provenance provenance = Provenance::recovered;

  Eigen::Index size() const { return values.rows(); }
  bool empty() const { return values.rows() == 0; }
  /// ε of one player at sample k.
  Vector player(Eigen::Index k, int p) const {
    return values.row(k).segment(p * component_dim, component_dim).transpose();
  }
};

/// ε solving u = coupling(u°; ε) + feedback for one player and sample.
Vector invert_coupling(const CouplingSpec& coupling, const Vector& pure, const Vector& coupled,
                       std::size_t sample = 0, int player = 0);

/// A-posteriori ε from observables. `feedback` terms (if the game has any)
/// are removed using the recorded ξ before inverting the coupling.
EpsilonTrace recover_epsilon(const Trajectory& traj, const std::vector<CouplingSpec>& couplings,
                             const std::vector<XiFeedback>& feedback = {});
EpsilonTrace recover_epsilon(const Trajectory& traj, const GameDefinition& game);

/// Hidden ε as a trace. Requires the oracle key.
EpsilonTrace ground_truth_trace(const Trajectory& traj, const OracleAccess& key);

// ---------------------------------------------------------------------------
// Correlation integrals

struct IntegralReport {
  std::string functional;
  double mean = 0.0;
  double max_deviation = 0.0;
  bool integral = false;
};

/// Functional ids: "zero" (F = 0) and "linear-ratio:c" (F = ε' - c ε, using
/// the first two traces). Deviation is the sup over time and components of
/// |F(t) - mean F|; mean is the time mean averaged over components.
std::vector<IntegralReport> check_correlation_integrals(const std::vector<EpsilonTrace>& traces,
                                                        const std::vector<std::string>& functionals,
                                                        double tolerance = 1e-6);

// ---------------------------------------------------------------------------
// Short-term prediction

struct PredictorConfig {
  int order = 2;
  int fit_window = 200;
  friend bool operator==(const PredictorConfig&, const PredictorConfig&) = default;
};

/// Per component AR(p) coefficients (a_1..a_p, most recent lag first).
struct PredictionModel {
  int order = 0;
  int fit_window = 0;
  Matrix coefficients;  // components x order
  std::vector<bool> fallback;
};

/// Least-squares AR(p) fit on the last fit_window samples of every column.
PredictionModel fit_predictor(const EpsilonTrace& trace, const PredictorConfig& config);

/// Forecast path from the last sample: row 0 is the last observed ε, row j
/// the forecast j steps ahead; delta_t must be a multiple of dt.
Matrix forecast_path(const EpsilonTrace& trace, const PredictionModel& model, double delta_t);

struct Forecast {
  Vector value;
  PredictionModel model;
};

Forecast predict_epsilon(const EpsilonTrace& trace, double delta_t, const PredictorConfig& config);

// ---------------------------------------------------------------------------
// Applicability of resonance control

struct WordSequence;

/// Time lag at which the pooled ε autocorrelation first drops below 1/e.
/// +inf for a constant trace. Uses lags up to max_lag_time (or half the
/// trace); if no crossing occurs the largest lag tried is returned.
double eps_variation_timescale(const EpsilonTrace& trace, double max_lag_time = 0.0);

/// median set duration / ε variation timescale. Control applies when < 1.
/// Lags are scanned up to four median set durations, so ratios below 0.25
/// are reported as 0.25. A positive `tail_samples` restricts the estimate
/// to the most recent samples.
double timescale_ratio(const EpsilonTrace& trace, const WordSequence& words,
                       Eigen::Index tail_samples = 0);

/// The last `count` samples of a trace (all of it if count <= 0 or larger).
EpsilonTrace tail(const EpsilonTrace& trace, Eigen::Index count);

}  // namespace kr
