#pragma once

#include "kr/common.hpp"
#include "kr/rng.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace kr {

// ---------------------------------------------------------------------------
// Game definition

/// Known coupling u_i = u_i(u°_i; ε_i) between a player's pure control and
/// the unknown parameter process. Both forms act componentwise, so
/// eps_dim equals the game's control_dim.
struct CouplingSpec {
  enum class Form { additive, affine_gain };

  Form form = Form::additive;
  int eps_dim = 1;
  /// additive: u = u° + scale * ε
  double scale = 1.0;
  /// affine-gain: u = (1 + ε) ⊙ u° + bias_weight * ε
  double bias_weight = 2.0;

  Vector apply(const Vector& pure, const Vector& eps) const;

  friend bool operator==(const CouplingSpec&, const CouplingSpec&) = default;
};

std::string to_string(CouplingSpec::Form form);
CouplingSpec::Form parse_coupling_form(const std::string& text);

/// Ground-truth generator of ε. Fields are grouped by kind; fields of the
/// other kinds are ignored.
struct HiddenBehaviorSpec {
  enum class Kind { oscillator, lorenz_like, lagged_mirror };

  Kind kind = Kind::oscillator;
  double amplitude = 1.0;

  // oscillator: ε_c = amplitude * sin(frequency_c * t + phase_c), phases seeded
  std::vector<double> frequencies{1.0};

  // lorenz-like: one Lorenz system per ε component, ε_c = amplitude * sin(fold * x_c)
  // (fold == 0 gives amplitude * x_c / 10)
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
  double time_scale = 1.0;
  double fold = 1.0;
  double burn_in = 20.0;

  // lagged-mirror: target's ε during set n is gain * m_n with
  // m_n = memory * m_{n-1} + (1 - memory) * v_source(n - lag)
  int source_player = 1;
  int target_player = 0;
  int lag = 1;
  double gain = 1.0;
  double memory = 0.0;

  friend bool operator==(const HiddenBehaviorSpec&, const HiddenBehaviorSpec&) = default;
};

std::string to_string(HiddenBehaviorSpec::Kind kind);
HiddenBehaviorSpec::Kind parse_hidden_kind(const std::string& text);

/// Discretized delay line stored in the tail of ξ: `resolution` slots of φ,
/// shifted every `stride` steps. Exact delay when stride is 1.
struct DelayLine {
  int resolution = 1;
  int stride = 1;
  friend bool operator==(const DelayLine&, const DelayLine&) = default;
};

/// u_player += gain * ξ[offset, offset + control_dim)
struct XiFeedback {
  int player = 0;
  int xi_offset = 0;
  double gain = 1.0;
  friend bool operator==(const XiFeedback&, const XiFeedback&) = default;
};

struct GameDefinition {
  int state_dim = 1;
  int intention_dim = 1;
  int n_players = 1;
  int control_dim = 1;
  std::string phi_rhs = "linear-decay";
  Params phi_params;
  std::string xi_rhs = "none";
  Params xi_params;
  std::vector<CouplingSpec> couplings;
  HiddenBehaviorSpec hidden;
  /// Player-index sets (0-based). Empty means singletons {i}.
  std::vector<std::vector<int>> coalitions;
  std::optional<DelayLine> delay_line;
  std::vector<XiFeedback> feedback;
  /// Initial φ and ξ; empty means zeros.
  Vector phi0;
  Vector xi0;

  int eps_total_dim() const { return n_players * control_dim; }
  int delay_dim() const;
  int continuous_xi_dim() const { return intention_dim - delay_dim(); }
  int eps_state_dim() const;
  std::vector<std::vector<int>> effective_coalitions() const;
  Vector initial_phi() const;
  Vector initial_xi() const;

  void validate() const;

  friend bool operator==(const GameDefinition& a, const GameDefinition& b);
};

std::vector<std::string> known_phi_rhs();
std::vector<std::string> known_xi_rhs();

// ---------------------------------------------------------------------------
// Hidden behavior runtime

struct HiddenState {
  Vector ode;
  // lagged-mirror bookkeeping
  Vector memory;
  std::deque<Vector> set_means;
  Vector acc_sum;
  double acc_time = 0.0;
  bool has_last = false;
  double last_t = 0.0;
  Vector last_value;
};

HiddenState seed_hidden(const GameDefinition& game, std::uint64_t seed);
Vector hidden_derivative(const GameDefinition& game, const Vector& ode);
std::vector<Vector> hidden_eps(const GameDefinition& game, const HiddenState& hidden,
                               const Vector& ode, double t);
/// Accumulate a recorded sample into the mirror's per-set trapezoid.
void hidden_record(const GameDefinition& game, HiddenState& hidden, double t,
                   const std::vector<Vector>& pure);
/// Set boundary: the mirror latches the finished set's source mean.
void hidden_close_set(const GameDefinition& game, HiddenState& hidden);

// ---------------------------------------------------------------------------
// Joint state, observation and stepping

struct JointState {
  std::int64_t step = 0;
  double t = 0.0;
  Vector phi;
  Vector xi;
  HiddenState hidden;
};

struct Sample {
  double t = 0.0;
  Vector phi;
  Vector xi;
  std::vector<Vector> u_pure;
  std::vector<Vector> u_coupled;
};

JointState initial_state(const GameDefinition& game, std::uint64_t seed);

/// Observable sample at `state` under pure controls, plus the ε that produced it.
Sample observe(const GameDefinition& game, const JointState& state,
               const std::vector<Vector>& pure, std::vector<Vector>* eps_out = nullptr);

/// Coalition controls v_i = sum of member u_j.
std::vector<Vector> coalition_controls(const GameDefinition& game,
                                       const std::vector<Vector>& coupled);

/// Feedback contributions added to each player's coupled control.
std::vector<Vector> feedback_terms(const GameDefinition& game, const Vector& xi);

/// One RK4 step of (φ, ξ, hidden) with pure controls held over the step.
/// Throws IntegrationDiverged naming the first non-finite joint component.
JointState step(const GameDefinition& game, const JointState& current,
                const std::vector<Vector>& pure, double dt);

// ---------------------------------------------------------------------------
// Control policies

struct PolicySpec {
  std::string id = "zero";
  Params params;
  friend bool operator==(const PolicySpec&, const PolicySpec&) = default;
};

std::vector<std::string> known_policies();

class PlayerPolicy {
 public:
  PlayerPolicy(PolicySpec spec, int control_dim, std::uint64_t seed);

  void begin_set(std::size_t index);
  Vector control(double t, const Vector& phi) const;
  /// Value used by the "held" policy for the current and later sets.
  void hold(Vector value);
  const PolicySpec& spec() const { return spec_; }

 private:
  PolicySpec spec_;
  int control_dim_;
  Rng rng_;
  Vector value_;
  std::vector<double> phases_;
};

class PolicySet {
 public:
  PolicySet(const GameDefinition& game, const std::vector<PolicySpec>& specs,
            std::uint64_t seed);

  void begin_set(std::size_t index);
  std::vector<Vector> controls(double t, const Vector& phi) const;
  PlayerPolicy& player(int p) { return players_.at(static_cast<std::size_t>(p)); }
  /// Replace a player's policy; the new one starts at the current set.
  void replace(int p, const PolicySpec& spec);

 private:
  int control_dim_;
  std::uint64_t seed_;
  std::size_t set_index_ = 0;
  std::vector<PlayerPolicy> players_;
};

std::uint64_t policy_seed(std::uint64_t seed, int player);

// ---------------------------------------------------------------------------
// Trajectory

class OracleAccess;

class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(double dt) : dt_(dt) {}

  double dt() const { return dt_; }
  const std::vector<Sample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const Sample& back() const { return samples_.back(); }

  void append(Sample sample, std::vector<Vector> eps_truth);

  /// Ground-truth ε per sample. Hidden: only test oracles and the
  /// explicit reveal export may obtain an OracleAccess key.
  const std::vector<std::vector<Vector>>& eps_truth(const OracleAccess&) const {
    return eps_truth_;
  }

  friend bool operator==(const Trajectory& a, const Trajectory& b);

 private:
  double dt_ = 0.0;
  std::vector<Sample> samples_;
  std::vector<std::vector<Vector>> eps_truth_;
};

bool operator==(const Sample& a, const Sample& b);

/// Exact equality of vectors, false on size mismatch.
bool same_vector(const Vector& a, const Vector& b);

// ---------------------------------------------------------------------------
// Simulation driver

/// Advances one game with its policies and records every sample.
/// Sample semantics: a sample carries the controls of the policy active
/// when the state was reached; the step leaving a set boundary uses the
/// next set's policy.
class Simulator {
 public:
  Simulator(GameDefinition game, const std::vector<PolicySpec>& policies, double dt,
            std::uint64_t seed);

  const GameDefinition& game() const { return game_; }
  const JointState& state() const { return state_; }
  const Trajectory& trajectory() const { return trajectory_; }
  PolicySet& policies() { return policies_; }
  double dt() const { return dt_; }
  std::size_t set_index() const { return set_index_; }

  void advance();
  /// Start set `index` (> current): latch hidden state, begin policies.
  void begin_set(std::size_t index);

 private:
  void record();

  GameDefinition game_;
  double dt_;
  PolicySet policies_;
  JointState state_;
  Trajectory trajectory_;
  std::size_t set_index_ = 0;
};

/// Fixed-horizon simulation. When `set_length` is given, sets of that
/// duration are clocked internally (policies and the mirror need them).
Trajectory simulate(const GameDefinition& game, double horizon, double dt,
                    const std::vector<PolicySpec>& policies, std::uint64_t seed,
                    std::optional<double> set_length = std::nullopt);

Trajectory simulate(const GameDefinition& game, double horizon, double dt,
                    const std::string& policy_id, std::uint64_t seed,
                    std::optional<double> set_length = std::nullopt);

// ---------------------------------------------------------------------------
// History-feedback augmentation

/// Delayed feedback u_player(t) += gain * φ(t - delay), sampled at dt.
struct DelayFeedbackSpec {
  int player = 0;
  double delay = 0.0;
  double gain = 1.0;
  double dt = 0.01;
};

/// Rewrites a delayed feedback as extra ξ components (a delay line), so the
/// returned game is differential in (φ, ξ). Pre-history is φ0.
GameDefinition augment_history_feedback(const GameDefinition& game,
                                        const DelayFeedbackSpec& delay, int buffer_resolution);

}  // namespace kr
