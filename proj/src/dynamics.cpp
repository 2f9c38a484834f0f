#include "kr/dynamics.hpp"
#include "kr/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace kr {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ", ";
    out += item;
  }
  return out;
}

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ValidationError(field, field + ": " + message);
}

}  // namespace

// ---------------------------------------------------------------------------
// Coupling

Vector CouplingSpec::apply(const Vector& pure, const Vector& eps) const {
  switch (form) {
    case Form::additive:
      return pure + scale * eps;
    case Form::affine_gain:
      return (Vector::Ones(pure.size()) + eps).cwiseProduct(pure) + bias_weight * eps;
  }
  return pure;
}

std::string to_string(CouplingSpec::Form form) {
  return form == CouplingSpec::Form::additive ? "additive" : "affine-gain";
}

CouplingSpec::Form parse_coupling_form(const std::string& text) {
  if (text == "additive") return CouplingSpec::Form::additive;
  if (text == "affine-gain") return CouplingSpec::Form::affine_gain;
  throw ValidationError("coupling", "unknown coupling form '" + text +
                                        "' (known: additive, affine-gain)");
}

std::string to_string(HiddenBehaviorSpec::Kind kind) {
  switch (kind) {
    case HiddenBehaviorSpec::Kind::oscillator:
      return "oscillator";
    case HiddenBehaviorSpec::Kind::lorenz_like:
      return "lorenz-like";
    case HiddenBehaviorSpec::Kind::lagged_mirror:
      return "lagged-mirror";
  }
  return "oscillator";
}

HiddenBehaviorSpec::Kind parse_hidden_kind(const std::string& text) {
  if (text == "oscillator") return HiddenBehaviorSpec::Kind::oscillator;
  if (text == "lorenz-like") return HiddenBehaviorSpec::Kind::lorenz_like;
  if (text == "lagged-mirror") return HiddenBehaviorSpec::Kind::lagged_mirror;
  throw ValidationError("hidden.kind", "unknown hidden behavior '" + text +
                                           "' (known: oscillator, lorenz-like, lagged-mirror)");
}

// ---------------------------------------------------------------------------
// GameDefinition

std::vector<std::string> known_phi_rhs() { return {"kaleidoscope", "linear-decay"}; }
std::vector<std::string> known_xi_rhs() { return {"none", "phi-relaxation", "relaxation"}; }

int GameDefinition::delay_dim() const {
  return delay_line ? delay_line->resolution * state_dim : 0;
}

int GameDefinition::eps_state_dim() const {
  const int comps = eps_total_dim();
  switch (hidden.kind) {
    case HiddenBehaviorSpec::Kind::oscillator:
      return 2 * comps;
    case HiddenBehaviorSpec::Kind::lorenz_like:
      return 3 * comps;
    case HiddenBehaviorSpec::Kind::lagged_mirror:
      return control_dim * (hidden.lag + 1);
  }
  return comps;
}

std::vector<std::vector<int>> GameDefinition::effective_coalitions() const {
  if (!coalitions.empty()) return coalitions;
  std::vector<std::vector<int>> singletons;
  for (int p = 0; p < n_players; ++p) singletons.push_back({p});
  return singletons;
}

Vector GameDefinition::initial_phi() const {
  return phi0.size() == 0 ? Vector::Zero(state_dim) : phi0;
}

Vector GameDefinition::initial_xi() const {
  return xi0.size() == 0 ? Vector::Zero(intention_dim) : xi0;
}

void GameDefinition::validate() const {
  require(state_dim >= 1, "state_dim", "must be >= 1");
  require(intention_dim >= 1, "intention_dim", "must be >= 1");
  require(n_players >= 1, "n_players", "must be >= 1");
  require(control_dim >= 1, "control_dim", "must be >= 1");
  require(continuous_xi_dim() >= 0, "intention_dim", "smaller than the delay line");

  const auto phi_known = known_phi_rhs();
  require(std::find(phi_known.begin(), phi_known.end(), phi_rhs) != phi_known.end(), "phi_rhs",
          "unknown id '" + phi_rhs + "' (known: " + join(phi_known) + ")");
  const auto xi_known = known_xi_rhs();
  require(std::find(xi_known.begin(), xi_known.end(), xi_rhs) != xi_known.end(), "xi_rhs",
          "unknown id '" + xi_rhs + "' (known: " + join(xi_known) + ")");
  if (phi_rhs == "kaleidoscope") require(state_dim == 2, "state_dim", "kaleidoscope needs 2");
  if (xi_rhs == "relaxation")
    require(continuous_xi_dim() == control_dim, "intention_dim",
            "relaxation needs continuous ξ of control_dim");
  if (xi_rhs == "phi-relaxation")
    require(continuous_xi_dim() == state_dim, "intention_dim",
            "phi-relaxation needs continuous ξ of state_dim");

  require(static_cast<int>(couplings.size()) == n_players, "couplings", "one per player");
  for (const auto& c : couplings)
    require(c.eps_dim == control_dim, "couplings.eps_dim", "must equal control_dim");

  std::set<int> covered;
  for (const auto& coalition : coalitions) {
    require(!coalition.empty(), "coalitions", "coalition sets must be nonempty");
    for (const int p : coalition) {
      require(p >= 0 && p < n_players, "coalitions", "player index out of range");
      covered.insert(p);
    }
  }
  if (!coalitions.empty())
    require(static_cast<int>(covered.size()) == n_players, "coalitions",
            "every player must belong to a coalition");

  switch (hidden.kind) {
    case HiddenBehaviorSpec::Kind::oscillator:
      require(!hidden.frequencies.empty(), "hidden.frequencies", "must be nonempty");
      break;
    case HiddenBehaviorSpec::Kind::lorenz_like:
      require(hidden.time_scale > 0.0, "hidden.time_scale", "must be > 0");
      require(hidden.burn_in >= 0.0, "hidden.burn_in", "must be >= 0");
      break;
    case HiddenBehaviorSpec::Kind::lagged_mirror:
      require(hidden.source_player >= 0 && hidden.source_player < n_players,
              "hidden.source_player", "out of range");
      require(hidden.target_player >= 0 && hidden.target_player < n_players,
              "hidden.target_player", "out of range");
      require(hidden.lag >= 1, "hidden.lag", "must be >= 1");
      require(hidden.memory >= 0.0 && hidden.memory < 1.0, "hidden.memory", "must be in [0, 1)");
      break;
  }

  if (phi0.size() != 0) require(phi0.size() == state_dim, "phi0", "size must be state_dim");
  if (xi0.size() != 0) require(xi0.size() == intention_dim, "xi0", "size must be intention_dim");
  if (delay_line) {
    require(delay_line->resolution >= 1, "delay_line.resolution", "must be >= 1");
    require(delay_line->stride >= 1, "delay_line.stride", "must be >= 1");
  }
  for (const auto& fb : feedback) {
    require(fb.player >= 0 && fb.player < n_players, "feedback.player", "out of range");
    require(fb.xi_offset >= 0 && fb.xi_offset + control_dim <= intention_dim, "feedback.xi_offset",
            "out of range");
  }
}

bool same_vector(const Vector& a, const Vector& b) {
  return a.size() == b.size() && (a.size() == 0 || a == b);
}

bool operator==(const GameDefinition& a, const GameDefinition& b) {
  return a.state_dim == b.state_dim && a.intention_dim == b.intention_dim &&
         a.n_players == b.n_players && a.control_dim == b.control_dim &&
         a.phi_rhs == b.phi_rhs && a.phi_params == b.phi_params && a.xi_rhs == b.xi_rhs &&
         a.xi_params == b.xi_params && a.couplings == b.couplings && a.hidden == b.hidden &&
         a.coalitions == b.coalitions && a.delay_line == b.delay_line &&
         a.feedback == b.feedback && same_vector(a.phi0, b.phi0) && same_vector(a.xi0, b.xi0);
}

// ---------------------------------------------------------------------------
// Hidden behavior

namespace {

Vector lorenz_rhs(const HiddenBehaviorSpec& h, const Vector& ode, double scale) {
  Vector d(ode.size());
  for (Eigen::Index i = 0; i + 2 < ode.size(); i += 3) {
    const double x = ode[i], y = ode[i + 1], z = ode[i + 2];
    d[i] = scale * h.sigma * (y - x);
    d[i + 1] = scale * (x * (h.rho - z) - y);
    d[i + 2] = scale * (x * y - h.beta * z);
  }
  return d;
}

}  // namespace

HiddenState seed_hidden(const GameDefinition& game, std::uint64_t seed) {
  const auto& h = game.hidden;
  const int comps = game.eps_total_dim();
  HiddenState state;
  Rng rng(seed, "hidden");
  switch (h.kind) {
    case HiddenBehaviorSpec::Kind::oscillator: {
      state.ode.resize(2 * comps);
      for (int c = 0; c < comps; ++c) {
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        state.ode[2 * c] = std::cos(phase);
        state.ode[2 * c + 1] = std::sin(phase);
      }
      break;
    }
    case HiddenBehaviorSpec::Kind::lorenz_like: {
      state.ode.resize(3 * comps);
      for (int c = 0; c < comps; ++c) {
        state.ode[3 * c] = 1.0 + rng.uniform(-5.0, 5.0);
        state.ode[3 * c + 1] = 1.0 + rng.uniform(-5.0, 5.0);
        state.ode[3 * c + 2] = 20.0 + rng.uniform(-5.0, 5.0);
      }
      const double h_burn = 0.01;
      const auto steps = static_cast<long>(std::llround(h.burn_in / h_burn));
      const auto rhs = [&](double, const Vector& y) { return lorenz_rhs(h, y, 1.0); };
      for (long k = 0; k < steps; ++k) state.ode = rk4_step(rhs, 0.0, state.ode, h_burn);
      break;
    }
    case HiddenBehaviorSpec::Kind::lagged_mirror:
      state.ode.resize(0);
      state.memory = Vector::Zero(game.control_dim);
      state.acc_sum = Vector::Zero(game.control_dim);
      break;
  }
  return state;
}

Vector hidden_derivative(const GameDefinition& game, const Vector& ode) {
  const auto& h = game.hidden;
  switch (h.kind) {
    case HiddenBehaviorSpec::Kind::oscillator: {
      Vector d(ode.size());
      for (Eigen::Index c = 0; 2 * c + 1 < ode.size(); ++c) {
        const double f = h.frequencies[static_cast<std::size_t>(c) % h.frequencies.size()];
        d[2 * c] = -f * ode[2 * c + 1];
        d[2 * c + 1] = f * ode[2 * c];
      }
      return d;
    }
    case HiddenBehaviorSpec::Kind::lorenz_like:
      return lorenz_rhs(h, ode, h.time_scale);
    case HiddenBehaviorSpec::Kind::lagged_mirror:
      return Vector(0);
  }
  return Vector(0);
}

std::vector<Vector> hidden_eps(const GameDefinition& game, const HiddenState& hidden,
                               const Vector& ode, double /*t*/) {
  const auto& h = game.hidden;
  const int cd = game.control_dim;
  std::vector<Vector> eps(static_cast<std::size_t>(game.n_players), Vector::Zero(cd));
  switch (h.kind) {
    case HiddenBehaviorSpec::Kind::oscillator:
      for (int p = 0; p < game.n_players; ++p)
        for (int c = 0; c < cd; ++c) eps[p][c] = h.amplitude * ode[2 * (p * cd + c) + 1];
      break;
    case HiddenBehaviorSpec::Kind::lorenz_like:
      for (int p = 0; p < game.n_players; ++p)
        for (int c = 0; c < cd; ++c) {
          const double x = ode[3 * (p * cd + c)];
          eps[p][c] = h.fold == 0.0 ? h.amplitude * x / 10.0 : h.amplitude * std::sin(h.fold * x);
        }
      break;
    case HiddenBehaviorSpec::Kind::lagged_mirror:
      eps[h.target_player] = h.gain * hidden.memory;
      break;
  }
  return eps;
}

void hidden_record(const GameDefinition& game, HiddenState& hidden, double t,
                   const std::vector<Vector>& pure) {
  if (game.hidden.kind != HiddenBehaviorSpec::Kind::lagged_mirror) return;
  const Vector& value = pure[game.hidden.source_player];
  if (hidden.has_last) {
    const double h = t - hidden.last_t;
    hidden.acc_sum += 0.5 * h * (value + hidden.last_value);
    hidden.acc_time += h;
  }
  hidden.has_last = true;
  hidden.last_t = t;
  hidden.last_value = value;
}

void hidden_close_set(const GameDefinition& game, HiddenState& hidden) {
  const auto& h = game.hidden;
  if (h.kind != HiddenBehaviorSpec::Kind::lagged_mirror) return;
  const Vector mean = hidden.acc_time > 0.0 ? Vector(hidden.acc_sum / hidden.acc_time)
                                            : Vector(Vector::Zero(game.control_dim));
  hidden.set_means.push_back(mean);
  while (static_cast<int>(hidden.set_means.size()) > h.lag) hidden.set_means.pop_front();
  if (static_cast<int>(hidden.set_means.size()) == h.lag)
    hidden.memory = h.memory * hidden.memory + (1.0 - h.memory) * hidden.set_means.front();
  hidden.acc_sum.setZero();
  hidden.acc_time = 0.0;
}

// ---------------------------------------------------------------------------
// Right-hand sides

namespace {

Vector phi_rhs(const GameDefinition& game, const Vector& phi, const std::vector<Vector>& v) {
  if (game.phi_rhs == "kaleidoscope") {
    const double alpha = param_or(game.phi_params, "alpha", 1.0);
    const double radius = param_or(game.phi_params, "radius", 1.0);
    const double omega = param_or(game.phi_params, "omega", std::numbers::pi / 2.0);
    const double push = param_or(game.phi_params, "push", std::numbers::pi / 8.0);
    double drive = 0.0;
    for (const auto& vi : v) drive += vi.mean();
    drive /= static_cast<double>(v.size());
    const double w = omega + push * drive;
    const double radial = alpha * (radius * radius - phi.squaredNorm());
    Vector d(2);
    d[0] = radial * phi[0] - w * phi[1];
    d[1] = radial * phi[1] + w * phi[0];
    return d;
  }
  // linear-decay: φ' = -a φ + b Σ v (controls truncated or zero-padded to state_dim)
  const double a = param_or(game.phi_params, "decay", 1.0);
  const double b = param_or(game.phi_params, "input", 1.0);
  Vector drive = Vector::Zero(phi.size());
  const Eigen::Index n = std::min<Eigen::Index>(phi.size(), game.control_dim);
  for (const auto& vi : v) drive.head(n) += vi.head(n);
  return -a * phi + b * drive;
}

Vector xi_rhs(const GameDefinition& game, const Vector& xi_cont, const Vector& phi,
              const std::vector<Vector>& coupled) {
  if (game.xi_rhs == "relaxation") {
    const double tau = param_or(game.xi_params, "tau", 1.0);
    Vector mean = Vector::Zero(game.control_dim);
    for (const auto& u : coupled) mean += u;
    mean /= static_cast<double>(coupled.size());
    return (mean - xi_cont) / tau;
  }
  if (game.xi_rhs == "phi-relaxation") {
    const double tau = param_or(game.xi_params, "tau", 1.0);
    return (phi - xi_cont) / tau;
  }
  return Vector::Zero(xi_cont.size());
}

std::vector<Vector> coupled_controls(const GameDefinition& game, const std::vector<Vector>& pure,
                                     const std::vector<Vector>& eps, const Vector& xi) {
  std::vector<Vector> u(pure.size());
  const auto fb = feedback_terms(game, xi);
  for (std::size_t p = 0; p < pure.size(); ++p)
    u[p] = game.couplings[p].apply(pure[p], eps[p]) + fb[p];
  return u;
}

}  // namespace

std::vector<Vector> feedback_terms(const GameDefinition& game, const Vector& xi) {
  std::vector<Vector> fb(static_cast<std::size_t>(game.n_players),
                         Vector::Zero(game.control_dim));
  for (const auto& f : game.feedback) fb[f.player] += f.gain * xi.segment(f.xi_offset, game.control_dim);
  return fb;
}

std::vector<Vector> coalition_controls(const GameDefinition& game,
                                       const std::vector<Vector>& coupled) {
  std::vector<Vector> v;
  for (const auto& coalition : game.effective_coalitions()) {
    Vector sum = coupled[coalition.front()];
    for (std::size_t k = 1; k < coalition.size(); ++k) sum += coupled[coalition[k]];
    v.push_back(std::move(sum));
  }
  return v;
}

JointState initial_state(const GameDefinition& game, std::uint64_t seed) {
  game.validate();
  JointState s;
  s.phi = game.initial_phi();
  s.xi = game.initial_xi();
  s.hidden = seed_hidden(game, seed);
  return s;
}

Sample observe(const GameDefinition& game, const JointState& state,
               const std::vector<Vector>& pure, std::vector<Vector>* eps_out) {
  auto eps = hidden_eps(game, state.hidden, state.hidden.ode, state.t);
  Sample s;
  s.t = state.t;
  s.phi = state.phi;
  s.xi = state.xi;
  s.u_pure = pure;
  s.u_coupled = coupled_controls(game, pure, eps, state.xi);
  if (eps_out) *eps_out = std::move(eps);
  return s;
}

JointState step(const GameDefinition& game, const JointState& current,
                const std::vector<Vector>& pure, double dt) {
  if (!(dt > 0.0)) throw ValidationError("dt", "dt: must be > 0");
  if (static_cast<int>(pure.size()) != game.n_players)
    throw ValidationError("pure_controls", "pure_controls: one vector per player");
  for (const auto& u : pure)
    if (u.size() != game.control_dim)
      throw ValidationError("pure_controls", "pure_controls: size must be control_dim");

  const int S = game.state_dim;
  const int C = game.continuous_xi_dim();
  const auto H = static_cast<int>(current.hidden.ode.size());
  const Vector delay_part = current.xi.tail(game.delay_dim());

  Vector y(S + C + H);
  y << current.phi, current.xi.head(C), current.hidden.ode;

  const auto rhs = [&](double t, const Vector& z) {
    const Vector phi = z.head(S);
    Vector xi(game.intention_dim);
    xi << z.segment(S, C), delay_part;
    const Vector ode = z.tail(H);
    const auto eps = hidden_eps(game, current.hidden, ode, t);
    const auto u = coupled_controls(game, pure, eps, xi);
    const auto v = coalition_controls(game, u);
    Vector d(z.size());
    d << phi_rhs(game, phi, v), xi_rhs(game, xi.head(C), phi, u), hidden_derivative(game, ode);
    return d;
  };

  const Vector next = rk4_step(rhs, current.t, y, dt);
  for (Eigen::Index i = 0; i < next.size(); ++i) {
    if (!std::isfinite(next[i])) {
      // report in joint (φ, ξ, hidden) indexing
      const Eigen::Index index = i < S + C ? i : i + game.delay_dim();
      throw IntegrationDiverged(static_cast<std::size_t>(index),
                                static_cast<double>(current.step + 1) * dt);
    }
  }

  JointState out;
  out.step = current.step + 1;
  out.t = static_cast<double>(out.step) * dt;
  out.phi = next.head(S);
  out.xi.resize(game.intention_dim);
  out.xi << next.segment(S, C), delay_part;
  out.hidden = current.hidden;
  out.hidden.ode = next.tail(H);

  if (game.delay_line && out.step % game.delay_line->stride == 0) {
    const int R = game.delay_line->resolution;
    for (int j = R - 1; j >= 1; --j) out.xi.segment(C + j * S, S) = out.xi.segment(C + (j - 1) * S, S);
    out.xi.segment(C, S) = current.phi;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Policies

std::vector<std::string> known_policies() {
  return {"constant", "held", "random-hold", "sine", "zero"};
}

std::uint64_t policy_seed(std::uint64_t seed, int player) {
  return stream_seed(seed, "policy/" + std::to_string(player));
}

PlayerPolicy::PlayerPolicy(PolicySpec spec, int control_dim, std::uint64_t seed)
    : spec_(std::move(spec)), control_dim_(control_dim), rng_(seed),
      value_(Vector::Zero(control_dim)) {
  const auto known = known_policies();
  if (std::find(known.begin(), known.end(), spec_.id) == known.end())
    throw ValidationError("policy", "unknown policy id '" + spec_.id + "' (known: " +
                                        join(known) + ")");
  if (spec_.id == "constant") {
    const double all = param_or(spec_.params, "value", 0.0);
    for (int c = 0; c < control_dim_; ++c)
      value_[c] = param_or(spec_.params, "value_" + std::to_string(c + 1), all);
  }
  if (spec_.id == "sine")
    for (int c = 0; c < control_dim_; ++c)
      phases_.push_back(rng_.uniform(0.0, 2.0 * std::numbers::pi));
}

void PlayerPolicy::begin_set(std::size_t) {
  if (spec_.id == "random-hold") {
    const double lo = param_or(spec_.params, "min", -1.0);
    const double hi = param_or(spec_.params, "max", 1.0);
    for (int c = 0; c < control_dim_; ++c) value_[c] = rng_.uniform(lo, hi);
  }
}

Vector PlayerPolicy::control(double t, const Vector&) const {
  if (spec_.id == "sine") {
    const double amp = param_or(spec_.params, "amplitude", 1.0);
    const double omega = param_or(spec_.params, "omega", 1.0);
    Vector u(control_dim_);
    for (int c = 0; c < control_dim_; ++c) u[c] = amp * std::sin(omega * t + phases_[c]);
    return u;
  }
  return value_;
}

void PlayerPolicy::hold(Vector value) {
  if (spec_.id != "held")
    throw ValidationError("control", "control: only a held policy accepts a value");
  if (value.size() != control_dim_)
    throw ValidationError("control", "control: size must be control_dim");
  value_ = std::move(value);
}

PolicySet::PolicySet(const GameDefinition& game, const std::vector<PolicySpec>& specs,
                     std::uint64_t seed)
    : control_dim_(game.control_dim), seed_(seed) {
  if (specs.size() != 1 && static_cast<int>(specs.size()) != game.n_players)
    throw ValidationError("policies", "policies: give one id or one per player");
  for (int p = 0; p < game.n_players; ++p)
    players_.emplace_back(specs.size() == 1 ? specs[0] : specs[p], control_dim_,
                          policy_seed(seed, p));
}

void PolicySet::begin_set(std::size_t index) {
  set_index_ = index;
  for (auto& p : players_) p.begin_set(index);
}

std::vector<Vector> PolicySet::controls(double t, const Vector& phi) const {
  std::vector<Vector> u;
  u.reserve(players_.size());
  for (const auto& p : players_) u.push_back(p.control(t, phi));
  return u;
}

void PolicySet::replace(int p, const PolicySpec& spec) {
  auto& slot = players_.at(static_cast<std::size_t>(p));
  slot = PlayerPolicy(spec, control_dim_, policy_seed(seed_, p) ^ fnv1a64(spec.id));
  slot.begin_set(set_index_);
}

// ---------------------------------------------------------------------------
// Trajectory

void Trajectory::append(Sample sample, std::vector<Vector> eps_truth) {
  samples_.push_back(std::move(sample));
  eps_truth_.push_back(std::move(eps_truth));
}

namespace {
bool same_vectors(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same_vector(a[i], b[i])) return false;
  return true;
}
}  // namespace

bool operator==(const Sample& a, const Sample& b) {
  return a.t == b.t && same_vector(a.phi, b.phi) && same_vector(a.xi, b.xi) &&
         same_vectors(a.u_pure, b.u_pure) && same_vectors(a.u_coupled, b.u_coupled);
}

bool operator==(const Trajectory& a, const Trajectory& b) {
  if (a.dt_ != b.dt_ || a.samples_ != b.samples_) return false;
  if (a.eps_truth_.size() != b.eps_truth_.size()) return false;
  for (std::size_t i = 0; i < a.eps_truth_.size(); ++i)
    if (!same_vectors(a.eps_truth_[i], b.eps_truth_[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Simulator

Simulator::Simulator(GameDefinition game, const std::vector<PolicySpec>& policies, double dt,
                     std::uint64_t seed)
    : game_(std::move(game)), dt_(dt), policies_(game_, policies, seed),
      state_(initial_state(game_, seed)), trajectory_(dt) {
  if (!(dt > 0.0)) throw ValidationError("dt", "dt: must be > 0");
  policies_.begin_set(0);
  record();
}

void Simulator::record() {
  const auto pure = policies_.controls(state_.t, state_.phi);
  std::vector<Vector> eps;
  auto sample = observe(game_, state_, pure, &eps);
  hidden_record(game_, state_.hidden, state_.t, pure);
  trajectory_.append(std::move(sample), std::move(eps));
}

void Simulator::advance() {
  const auto pure = policies_.controls(state_.t, state_.phi);
  state_ = step(game_, state_, pure, dt_);
  record();
}

void Simulator::begin_set(std::size_t index) {
  if (index <= set_index_) return;
  hidden_close_set(game_, state_.hidden);
  set_index_ = index;
  policies_.begin_set(index);
}

Trajectory simulate(const GameDefinition& game, double horizon, double dt,
                    const std::vector<PolicySpec>& policies, std::uint64_t seed,
                    std::optional<double> set_length) {
  if (!(dt > 0.0)) throw ValidationError("dt", "dt: must be > 0");
  if (!(horizon >= dt * (1.0 - 1e-9)))
    throw ValidationError("horizon", "horizon: must be >= dt");
  const auto steps = static_cast<long>(std::floor(horizon / dt + 1e-9));
  long set_steps = 0;
  if (set_length) {
    set_steps = std::max(1L, static_cast<long>(std::llround(*set_length / dt)));
  }
  Simulator sim(game, policies, dt, seed);
  for (long k = 0; k < steps; ++k) {
    if (set_steps > 0 && k > 0 && k % set_steps == 0)
      sim.begin_set(static_cast<std::size_t>(k / set_steps));
    sim.advance();
  }
  return sim.trajectory();
}

Trajectory simulate(const GameDefinition& game, double horizon, double dt,
                    const std::string& policy_id, std::uint64_t seed,
                    std::optional<double> set_length) {
  return simulate(game, horizon, dt, std::vector<PolicySpec>{PolicySpec{policy_id, {}}}, seed,
                  set_length);
}

// ---------------------------------------------------------------------------
// Augmentation

GameDefinition augment_history_feedback(const GameDefinition& game,
                                        const DelayFeedbackSpec& delay, int buffer_resolution) {
  if (delay.delay == 0.0) return game;
  if (buffer_resolution < 1)
    throw ValidationError("buffer_resolution", "buffer_resolution: must be >= 1");
  if (!(delay.dt > 0.0)) throw ValidationError("dt", "dt: must be > 0");
  if (delay.delay < delay.dt * (1.0 - 1e-9))
    throw ValidationError("delay", "delay: must be >= dt", "delay_not_representable");
  if (game.delay_line)
    throw ValidationError("delay", "delay: game already carries a delay line");
  if (game.control_dim != game.state_dim)
    throw ValidationError("delay", "delay: feedback of φ needs control_dim == state_dim");
  if (delay.player < 0 || delay.player >= game.n_players)
    throw ValidationError("delay.player", "delay.player: out of range");

  const double slot_steps = delay.delay / (buffer_resolution * delay.dt);
  const long stride = std::llround(slot_steps);
  if (stride < 1 || std::abs(slot_steps - static_cast<double>(stride)) > 1e-9 * std::max(1.0, slot_steps)) {
    std::ostringstream os;
    os << "delay: " << delay.delay << " is not a multiple of " << buffer_resolution
       << " slots of dt=" << delay.dt;
    throw ValidationError("delay", os.str(), "delay_not_representable");
  }

  GameDefinition out = game;
  const int old_dim = game.intention_dim;
  out.intention_dim = old_dim + game.state_dim * buffer_resolution;
  out.delay_line = DelayLine{buffer_resolution, static_cast<int>(stride)};
  out.feedback.push_back(
      XiFeedback{delay.player, old_dim + (buffer_resolution - 1) * game.state_dim, delay.gain});
  Vector xi0(out.intention_dim);
  xi0.head(old_dim) = game.initial_xi();
  for (int j = 0; j < buffer_resolution; ++j)
    xi0.segment(old_dim + j * game.state_dim, game.state_dim) = game.initial_phi();
  out.xi0 = xi0;
  out.validate();
  return out;
}

}  // namespace kr
