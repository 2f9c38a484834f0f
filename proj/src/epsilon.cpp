#include "kr/epsilon.hpp"
#include "kr/oracle.hpp"
#include "kr/verbalization.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kr {

Vector invert_coupling(const CouplingSpec& coupling, const Vector& pure, const Vector& coupled,
                       std::size_t sample, int player) {
  switch (coupling.form) {
    case CouplingSpec::Form::additive:
      if (coupling.scale == 0.0) throw NonInvertibleCoupling(sample, player, 0);
      return (coupled - pure) / coupling.scale;
    case CouplingSpec::Form::affine_gain: {
      Vector eps(pure.size());
      for (Eigen::Index c = 0; c < pure.size(); ++c) {
        const double denom = pure[c] + coupling.bias_weight;
        if (std::abs(denom) < 1e-12)
          throw NonInvertibleCoupling(sample, player, static_cast<int>(c));
        eps[c] = (coupled[c] - pure[c]) / denom;
      }
      return eps;
    }
  }
  return Vector::Zero(pure.size());
}

EpsilonTrace recover_epsilon(const Trajectory& traj, const std::vector<CouplingSpec>& couplings,
                             const std::vector<XiFeedback>& feedback) {
  EpsilonTrace out;
  out.dt = traj.dt();
  if (traj.empty()) return out;
  const auto players = static_cast<int>(traj[0].u_pure.size());
  if (static_cast<int>(couplings.size()) != players)
    throw ValidationError("couplings", "couplings: one per player");
  const auto cd = static_cast<int>(traj[0].u_pure.front().size());
  out.n_players = players;
  out.component_dim = cd;
  out.t.resize(static_cast<Eigen::Index>(traj.size()));
  out.values.resize(static_cast<Eigen::Index>(traj.size()), players * cd);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Sample& s = traj[k];
    out.t[static_cast<Eigen::Index>(k)] = s.t;
    for (int p = 0; p < players; ++p) {
      Vector u = s.u_coupled[p];
      for (const auto& f : feedback)
        if (f.player == p) u -= f.gain * s.xi.segment(f.xi_offset, cd);
      out.values.row(static_cast<Eigen::Index>(k)).segment(p * cd, cd) =
          invert_coupling(couplings[p], s.u_pure[p], u, k, p).transpose();
    }
  }
  return out;
}

EpsilonTrace recover_epsilon(const Trajectory& traj, const GameDefinition& game) {
  return recover_epsilon(traj, game.couplings, game.feedback);
}

EpsilonTrace ground_truth_trace(const Trajectory& traj, const OracleAccess& key) {
  const auto& truth = traj.eps_truth(key);
  EpsilonTrace out;
  out.dt = traj.dt();
  out.provenance = EpsilonTrace::Provenance::ground_truth_oracle;
  if (truth.empty()) return out;
  out.n_players = static_cast<int>(truth[0].size());
  out.component_dim = static_cast<int>(truth[0][0].size());
  const int cd = out.component_dim;
  out.t.resize(static_cast<Eigen::Index>(truth.size()));
  out.values.resize(static_cast<Eigen::Index>(truth.size()), out.n_players * cd);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    out.t[static_cast<Eigen::Index>(k)] = traj[k].t;
    for (int p = 0; p < out.n_players; ++p)
      out.values.row(static_cast<Eigen::Index>(k)).segment(p * cd, cd) = truth[k][p].transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<IntegralReport> check_correlation_integrals(const std::vector<EpsilonTrace>& traces,
                                                        const std::vector<std::string>& functionals,
                                                        double tolerance) {
  if (traces.empty()) throw ValidationError("traces", "traces: at least one trace is required");
  for (const auto& tr : traces)
    if (tr.size() != traces[0].size() || tr.values.cols() != traces[0].values.cols())
      throw ValidationError("traces", "traces: length mismatch");

  std::vector<IntegralReport> reports;
  for (const auto& id : functionals) {
    Matrix f;
    if (id == "zero") {
      f = Matrix::Zero(traces[0].size(), traces[0].values.cols());
    } else if (id.rfind("linear-ratio:", 0) == 0) {
      if (traces.size() < 2)
        throw ValidationError("traces", "traces: " + id + " needs two traces");
      double c = 0.0;
      try {
        std::size_t used = 0;
        c = std::stod(id.substr(13), &used);
        if (used != id.size() - 13) throw std::invalid_argument(id);
      } catch (const std::exception&) {
        throw ValidationError("functional", "functional: bad ratio in '" + id + "'");
      }
      f = traces[1].values - c * traces[0].values;
    } else {
      throw ValidationError("functional", "functional: unknown id '" + id +
                                              "' (known: zero, linear-ratio:<c>)");
    }
    IntegralReport r;
    r.functional = id;
    if (f.size() > 0) {
      const Eigen::RowVectorXd mean = f.colwise().mean();
      r.mean = mean.mean();
      r.max_deviation = (f.rowwise() - mean).cwiseAbs().maxCoeff();
    }
    r.integral = r.max_deviation < tolerance;
    reports.push_back(r);
  }
  return reports;
}

// ---------------------------------------------------------------------------

namespace {

long steps_for(double delta_t, double dt) {
  if (delta_t < 0.0) throw ValidationError("delta_t", "delta_t: must be >= 0");
  const double ratio = delta_t / dt;
  const long steps = std::lround(ratio);
  if (std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio))
    throw ValidationError("delta_t", "delta_t: must be a multiple of dt");
  return steps;
}

}  // namespace

PredictionModel fit_predictor(const EpsilonTrace& trace, const PredictorConfig& config) {
  const int p = config.order;
  const int w = config.fit_window;
  if (p < 1) throw ValidationError("predictor.order", "predictor.order: must be >= 1");
  if (w <= p) throw ValidationError("predictor.fit_window", "predictor.fit_window: must exceed order");
  if (trace.size() < w)
    throw ValidationError("trace", "trace: shorter than fit_window", "insufficient_history");

  const Eigen::Index comps = trace.values.cols();
  PredictionModel model;
  model.order = p;
  model.fit_window = w;
  model.coefficients = Matrix::Zero(comps, p);
  model.fallback.assign(static_cast<std::size_t>(comps), false);

  const Eigen::Index start = trace.size() - w;
  const Eigen::Index rows = w - p;
  for (Eigen::Index c = 0; c < comps; ++c) {
    const Vector x = trace.values.col(c).segment(start, w);
    Matrix design(rows, p);
    Vector target(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      target[r] = x[r + p];
      for (int j = 0; j < p; ++j) design(r, j) = x[r + p - 1 - j];
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    // Relative pivot threshold: exactly collinear lags (a constant history)
    // must count as rank deficient despite rounding in the factorization.
    qr.setThreshold(1e-10);
    const Vector a = rows >= p && qr.rank() == p ? Vector(qr.solve(target)) : Vector();
    if (a.size() == p && a.allFinite()) {
      model.coefficients.row(c) = a.transpose();
    } else {
      model.coefficients(c, 0) = 1.0;
      model.fallback[static_cast<std::size_t>(c)] = true;
    }
  }
  return model;
}

Matrix forecast_path(const EpsilonTrace& trace, const PredictionModel& model, double delta_t) {
  if (trace.empty()) throw ValidationError("trace", "trace: empty", "insufficient_history");
  const long steps = steps_for(delta_t, trace.dt);
  const int p = model.order;
  const Eigen::Index comps = trace.values.cols();
  const Eigen::Index n = trace.size();
  Matrix path(steps + 1, comps);
  path.row(0) = trace.values.row(n - 1);
  for (Eigen::Index c = 0; c < comps; ++c) {
    // history[j] holds x_{k-j}
    std::vector<double> history(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j)
      history[static_cast<std::size_t>(j)] = trace.values(std::max<Eigen::Index>(0, n - 1 - j), c);
    bool ok = true;
    for (long s = 1; s <= steps; ++s) {
      double next = 0.0;
      for (int j = 0; j < p; ++j) next += model.coefficients(c, j) * history[static_cast<std::size_t>(j)];
      if (!std::isfinite(next)) {
        ok = false;
        break;
      }
      history.insert(history.begin(), next);
      history.pop_back();
      path(s, c) = next;
    }
    if (!ok) path.col(c).setConstant(trace.values(n - 1, c));
  }
  return path;
}

Forecast predict_epsilon(const EpsilonTrace& trace, double delta_t, const PredictorConfig& config) {
  Forecast f;
  f.model = fit_predictor(trace, config);
  if (steps_for(delta_t, trace.dt) == 0) {
    f.value = trace.values.row(trace.size() - 1).transpose();
    return f;
  }
  const Matrix path = forecast_path(trace, f.model, delta_t);
  f.value = path.row(path.rows() - 1).transpose();
  return f;
}

// ---------------------------------------------------------------------------

double eps_variation_timescale(const EpsilonTrace& trace, double max_lag_time) {
  const Eigen::Index n = trace.size();
  if (n < 2) return std::numeric_limits<double>::infinity();
  const Matrix centered = trace.values.rowwise() - trace.values.colwise().mean();
  const double var = centered.squaredNorm();
  if (!(var > 1e-300)) return std::numeric_limits<double>::infinity();

  Eigen::Index max_lag = n / 2;
  if (max_lag_time > 0.0)
    max_lag = std::min<Eigen::Index>(max_lag, static_cast<Eigen::Index>(max_lag_time / trace.dt));
  max_lag = std::max<Eigen::Index>(max_lag, 1);

  const double threshold = std::exp(-1.0);
  for (Eigen::Index lag = 1; lag <= max_lag; ++lag) {
    const double r =
        (centered.topRows(n - lag).cwiseProduct(centered.bottomRows(n - lag))).sum() / var;
    if (r < threshold) return static_cast<double>(lag) * trace.dt;
  }
  return static_cast<double>(max_lag) * trace.dt;
}

EpsilonTrace tail(const EpsilonTrace& trace, Eigen::Index count) {
  if (count <= 0 || count >= trace.size()) return trace;
  EpsilonTrace out = trace;
  out.t = trace.t.tail(count);
  out.values = trace.values.bottomRows(count);
  return out;
}

double timescale_ratio(const EpsilonTrace& trace, const WordSequence& words,
                       Eigen::Index tail_samples) {
  if (words.entries.size() < 3)
    throw ValidationError("words", "words: at least 3 sets are required", "insufficient_history");
  const double median = median_duration(words);
  const double tau = eps_variation_timescale(tail(trace, tail_samples), 4.0 * median);
  if (std::isinf(tau)) return 0.0;
  return median / tau;
}

}  // namespace kr
