#pragma once

#include "kr/dynamics.hpp"
#include "kr/harness.hpp"
#include "kr/rng.hpp"
#include "kr/verbalization.hpp"

#include <deque>
#include <limits>

namespace kr::test {

/// One player, scalar φ and control, inert ξ, ε = 0 unless amplitude is set.
inline GameDefinition scalar_game(double amplitude = 0.0) {
  GameDefinition g;
  g.phi_rhs = "linear-decay";
  g.xi_rhs = "none";
  CouplingSpec c;
  c.eps_dim = 1;
  g.couplings = {c};
  g.hidden.kind = HiddenBehaviorSpec::Kind::oscillator;
  g.hidden.amplitude = amplitude;
  g.hidden.frequencies = {1.0};
  g.phi0 = Vector::Constant(1, 1.0);
  return g;
}

inline PolicySpec constant(double value) { return PolicySpec{"constant", {{"value", value}}}; }

inline ScenarioConfig scenario(const std::string& id, std::uint64_t seed, int n_sets) {
  ScenarioConfig c = scenario_defaults(id);
  c.seed = seed;
  c.n_sets = n_sets;
  return c;
}

// Independent ring-buffer integration of φ' = -φ + (u° + gain φ(t - delay)),
// feedback held over each step at the buffered value, pre-history φ0.
inline std::vector<double> ring_buffer_oracle(double phi0, double u, double gain, int delay_steps,
                                       double dt, int steps) {
  std::deque<double> history(static_cast<std::size_t>(delay_steps), phi0);
  std::vector<double> out{phi0};
  double phi = phi0;
  for (int k = 0; k < steps; ++k) {
    const double fb = gain * history.front();
    const auto f = [&](double y) { return -y + u + fb; };
    const double k1 = f(phi), k2 = f(phi + 0.5 * dt * k1), k3 = f(phi + 0.5 * dt * k2),
                 k4 = f(phi + dt * k3);
    history.pop_front();
    history.push_back(phi);
    phi += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    out.push_back(phi);
  }
  return out;
}

inline EpsilonTrace random_walk(std::uint64_t seed, int n, int dim, double step) {
  Rng rng(seed, "test/walk");
  EpsilonTrace tr;
  tr.dt = 0.01;
  tr.n_players = 1;
  tr.component_dim = dim;
  tr.values.resize(n, dim);
  tr.t.resize(n);
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(dim);
  for (int k = 0; k < n; ++k) {
    for (int c = 0; c < dim; ++c) x[c] += rng.uniform(-step, step);
    tr.values.row(k) = x;
    tr.t[k] = k * tr.dt;
  }
  return tr;
}

// Naive per-sample scan used as the reference for detect_transitions.
inline std::vector<std::size_t> brute_force_transitions(const EpsilonTrace& tr, const CellPartition& p) {
  const auto axis_bin = [](const std::vector<double>& cuts, double x) {
    int b = 0;
    for (double c : cuts) b += c < x ? 1 : 0;
    return b;
  };
  const auto plain_cell = [&](Eigen::Index k, std::vector<int>& bins) {
    int id = 0;
    bins.clear();
    for (int a = 0; a < p.dim(); ++a) {
      bins.push_back(axis_bin(p.cuts[a], tr.values(k, a)));
      id = id * static_cast<int>(p.cuts[a].size() + 1) + bins.back();
    }
    return id;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<int> running_bins, bins;
  int running = plain_cell(0, running_bins);
  std::vector<std::size_t> out{0};
  for (Eigen::Index k = 1; k < tr.size(); ++k) {
    bool inside = true;
    for (int a = 0; a < p.dim(); ++a) {
      const auto& cuts = p.cuts[a];
      const int b = running_bins[a];
      const double lo = b == 0 ? -inf : cuts[b - 1];
      const double hi = b == static_cast<int>(cuts.size()) ? inf : cuts[b];
      const double x = tr.values(k, a);
      inside = inside && lo - p.hysteresis < x && x <= hi + p.hysteresis;
    }
    if (inside) continue;
    const int c = plain_cell(k, bins);
    if (c != running) {
      running = c;
      running_bins = bins;
      out.push_back(static_cast<std::size_t>(k));
    }
  }
  return out;
}

}  // namespace kr::test
