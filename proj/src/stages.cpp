#include "kr/stages.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kr {

std::vector<std::string> known_predicates() {
  return {"always", "never", "norm-exceeds", "wheel-sector"};
}

Predicate make_predicate(const PredicateSpec& spec) {
  if (spec.id == "always") return [](const Vector&, const Word&) { return true; };
  if (spec.id == "never") return [](const Vector&, const Word&) { return false; };
  if (spec.id == "norm-exceeds") {
    const double threshold = param_or(spec.params, "threshold", 10.0);
    return [threshold](const Vector& phi, const Word&) { return phi.norm() > threshold; };
  }
  if (spec.id == "wheel-sector") {
    const int sectors = static_cast<int>(param_or(spec.params, "sectors", 4.0));
    if (sectors < 2) throw ValidationError("predicate.sectors", "predicate.sectors: must be >= 2");
    return [sectors](const Vector& phi, const Word& start) {
      if (phi.size() < 2) return false;
      double angle = std::atan2(phi[1], phi[0]);
      if (angle < 0.0) angle += 2.0 * std::numbers::pi;
      const int sector =
          std::min(sectors - 1, static_cast<int>(angle / (2.0 * std::numbers::pi / sectors)));
      return sector == (start.n + 1) % sectors;
    };
  }
  std::string known;
  for (const auto& id : known_predicates()) known += (known.empty() ? "" : ", ") + id;
  throw ValidationError("predicate", "predicate: unknown id '" + spec.id + "' (known: " + known + ")");
}

std::string to_string(FinishingReason reason) {
  return reason == FinishingReason::predicate ? "predicate" : "horizon";
}

PerceptionEngine::PerceptionEngine(EngineConfig config)
    : config_(std::move(config)), sim_(config_.game, config_.policies, config_.dt, config_.seed) {
  config_.omega_partition.validate("omega_partition");
  config_.control_partition.validate("control_partition");
  if (config_.omega_partition.dim() != config_.game.eps_total_dim())
    throw ValidationError("omega_partition", "omega_partition: needs one axis per ε component");
  if (config_.control_partition.dim() != config_.game.n_players * config_.game.control_dim)
    throw ValidationError("control_partition",
                          "control_partition: needs one axis per pure control component");
  make_predicate(config_.predicate);

  recovered_.resize(1024, config_.game.eps_total_dim());
  recover_last();

  words_.alphabet_size = config_.omega_partition.n_cells();
  const Sample& s0 = sim_.trajectory()[0];
  current_word_.n = 0;
  current_word_.t_start = current_word_.t_end = s0.t;
  current_word_.omega_value = recovered_.row(0).transpose();
  current_word_.omega_symbol = assign_cell(current_word_.omega_value, config_.omega_partition);
  current_word_.v_value = stacked_pure(s0);
  current_word_.v_symbol = assign_cell(current_word_.v_value, config_.control_partition);
}

void PerceptionEngine::recover_last() {
  const auto& traj = sim_.trajectory();
  const std::size_t k = traj.size() - 1;
  const Sample& s = traj[k];
  if (rows_ == recovered_.rows()) recovered_.conservativeResize(2 * rows_ + 1, Eigen::NoChange);
  const int cd = config_.game.control_dim;
  const auto fb = feedback_terms(config_.game, s.xi);
  for (int p = 0; p < config_.game.n_players; ++p)
    recovered_.row(rows_).segment(p * cd, cd) =
        invert_coupling(config_.game.couplings[p], s.u_pure[p], s.u_coupled[p] - fb[p], k, p)
            .transpose();
  ++rows_;
}

EpsilonTrace PerceptionEngine::recovered_tail(Eigen::Index count) const {
  if (count <= 0 || count > rows_) count = rows_;
  const Eigen::Index first = rows_ - count;
  EpsilonTrace out;
  out.dt = config_.dt;
  out.n_players = config_.game.n_players;
  out.component_dim = config_.game.control_dim;
  out.values = recovered_.middleRows(first, count);
  out.t.resize(count);
  const auto& traj = sim_.trajectory();
  for (Eigen::Index i = 0; i < count; ++i) out.t[i] = traj[static_cast<std::size_t>(first + i)].t;
  return out;
}

SetRecord PerceptionEngine::run_set() {
  return run_set(config_.predicate, config_.max_duration);
}

SetRecord PerceptionEngine::run_set(const PredicateSpec& predicate, double max_duration) {
  return run_set_impl(make_predicate(predicate), max_duration, nullptr);
}

SetRecord PerceptionEngine::run_set_impl(const Predicate& predicate, double max_duration,
                                         const SetHook* hook) {
  if (!std::isfinite(max_duration) || !(max_duration > 0.0))
    throw ValidationError("max_duration", "max_duration: must be finite and > 0");
  const long max_steps = std::max(1L, std::lround(max_duration / config_.dt));

  const std::size_t index = sets_.size();
  if (index > 0) sim_.begin_set(index);
  if (hook && *hook) (*hook)(index, *this);

  const auto& traj = sim_.trajectory();
  SetRecord rec;
  rec.index = index;
  rec.sample_begin = traj.size() - 1;
  rec.t_begin = traj.back().t;
  rec.start = {traj.back().phi, traj.back().xi};
  rec.omega_at_start = current_word_;

  RunningMean omega(current_word_.omega_value);
  RunningMean v(current_word_.v_value);
  RunningMean phi1;
  rec.finishing_reason = FinishingReason::horizon;
  for (long s = 0; s < max_steps; ++s) {
    sim_.advance();
    recover_last();
    const std::size_t k = traj.size() - 1;
    const double h = traj[k].t - traj[k - 1].t;
    const auto row = static_cast<Eigen::Index>(k);
    omega.add(h, recovered_.row(row - 1).transpose(), recovered_.row(row).transpose());
    v.add(h, stacked_pure(traj[k - 1]), stacked_pure(traj[k]));
    phi1.add(h, traj[k - 1].phi.head(1), traj[k].phi.head(1));
    if (predicate(traj[k].phi, rec.omega_at_start)) {
      rec.finishing_reason = FinishingReason::predicate;
      break;
    }
  }

  rec.sample_end = traj.size() - 1;
  rec.t_end = traj.back().t;
  rec.end = {traj.back().phi, traj.back().xi};
  rec.phi_summary = phi1.value()[0];

  Word w;
  w.n = current_word_.n + 1;
  w.t_start = rec.t_begin;
  w.t_end = rec.t_end;
  w.omega_value = omega.value();
  w.omega_symbol = assign_cell(w.omega_value, config_.omega_partition);
  w.v_value = v.value();
  w.v_symbol = assign_cell(w.v_value, config_.control_partition);
  words_.entries.push_back(w);
  current_word_ = std::move(w);
  sets_.push_back(rec);
  return rec;
}

MatchResult PerceptionEngine::run_match(std::size_t n_sets, const SetHook& before_set) {
  if (n_sets < 1) throw ValidationError("n_sets", "n_sets: must be >= 1");
  const Predicate predicate = make_predicate(config_.predicate);
  for (std::size_t i = 0; i < n_sets; ++i) {
    const std::string where = "set " + std::to_string(sets_.size()) + ": ";
    try {
      run_set_impl(predicate, config_.max_duration, &before_set);
    } catch (const ValidationError& e) {
      throw ValidationError(e.field(), where + e.what(), e.code());
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    }
  }
  return {sets_, words_};
}

}  // namespace kr
