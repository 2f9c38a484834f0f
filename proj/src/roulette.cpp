#include "kr/roulette.hpp"
#include "kr/rng.hpp"
#include "kr/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace kr {

namespace {

int symbol_count(const std::vector<int>& x) {
  int m = 0;
  for (const int s : x) {
    if (s < 0) throw ValidationError("symbols", "symbols: must be nonnegative");
    m = std::max(m, s + 1);
  }
  return m;
}

Matrix contingency(const std::vector<int>& x, const std::vector<int>& y) {
  Matrix table = Matrix::Zero(symbol_count(x), symbol_count(y));
  for (std::size_t k = 0; k < x.size(); ++k) table(x[k], y[k]) += 1.0;
  return table;
}

double entropy_bits(const Vector& counts) {
  const double total = counts.sum();
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (Eigen::Index i = 0; i < counts.size(); ++i)
    if (counts[i] > 0.0) {
      const double p = counts[i] / total;
      h -= p * std::log2(p);
    }
  return h;
}

double mi_of_table(const Matrix& table) {
  const double total = table.sum();
  if (total <= 0.0) return 0.0;
  const Vector rows = table.rowwise().sum();
  const Vector cols = table.colwise().sum().transpose();
  double mi = 0.0;
  for (Eigen::Index i = 0; i < table.rows(); ++i)
    for (Eigen::Index j = 0; j < table.cols(); ++j)
      if (table(i, j) > 0.0)
        mi += table(i, j) / total * std::log2(table(i, j) * total / (rows[i] * cols[j]));
  return std::max(0.0, mi);
}

bool degenerate(const std::vector<int>& x) {
  return std::all_of(x.begin(), x.end(), [&](int s) { return s == x.front(); });
}

struct LagScan {
  double statistic = 0.0;
  int lag = 0;
  std::vector<double> medians;
  std::vector<double> best_windows;
};

LagScan scan_lags(const std::vector<int>& v, const std::vector<int>& omega, int window,
                  int max_lag, int nv, int no) {
  LagScan out;
  out.medians.assign(static_cast<std::size_t>(max_lag + 1), 0.0);
  bool first = true;
  for (int lag = 0; lag <= max_lag; ++lag) {
    if (omega.size() < static_cast<std::size_t>(lag + window)) continue;
    const std::size_t pairs = omega.size() - static_cast<std::size_t>(lag);
    std::vector<double> mis;
    for (std::size_t start = 0; start + static_cast<std::size_t>(window) <= pairs; start += window) {
      Matrix table = Matrix::Zero(nv, no);
      for (std::size_t k = start; k < start + static_cast<std::size_t>(window); ++k)
        table(v[k], omega[k + static_cast<std::size_t>(lag)]) += 1.0;
      mis.push_back(mi_of_table(table));
    }
    const double m = median(mis);
    out.medians[static_cast<std::size_t>(lag)] = m;
    if (first || m > out.statistic) {
      out.statistic = m;
      out.lag = lag;
      out.best_windows = std::move(mis);
      first = false;
    }
  }
  return out;
}

}  // namespace

double cramers_v(const std::vector<int>& x, const std::vector<int>& y) {
  if (x.size() != y.size()) throw ValidationError("symbols", "symbols: length mismatch");
  if (x.empty()) return 0.0;
  const Matrix full = contingency(x, y);
  std::vector<Eigen::Index> rows, cols;
  for (Eigen::Index i = 0; i < full.rows(); ++i)
    if (full.row(i).sum() > 0.0) rows.push_back(i);
  for (Eigen::Index j = 0; j < full.cols(); ++j)
    if (full.col(j).sum() > 0.0) cols.push_back(j);
  const auto k = static_cast<double>(std::min(rows.size(), cols.size()));
  if (k < 2.0) return 0.0;
  const double n = full.sum();
  double chi = 0.0;
  for (const auto i : rows)
    for (const auto j : cols) {
      const double expected = full.row(i).sum() * full.col(j).sum() / n;
      chi += (full(i, j) - expected) * (full(i, j) - expected) / expected;
    }
  return std::sqrt(chi / (n * (k - 1.0)));
}

double mutual_information(const std::vector<int>& x, const std::vector<int>& y) {
  if (x.size() != y.size()) throw ValidationError("symbols", "symbols: length mismatch");
  if (x.empty()) return 0.0;
  return mi_of_table(contingency(x, y));
}

double block_entropy(const std::vector<int>& symbols, int n) {
  if (n < 1 || symbols.size() < static_cast<std::size_t>(n)) return 0.0;
  std::map<std::vector<int>, double> counts;
  for (std::size_t k = 0; k + static_cast<std::size_t>(n) <= symbols.size(); ++k)
    counts[std::vector<int>(symbols.begin() + static_cast<std::ptrdiff_t>(k),
                            symbols.begin() + static_cast<std::ptrdiff_t>(k) + n)] += 1.0;
  Vector c(static_cast<Eigen::Index>(counts.size()));
  Eigen::Index i = 0;
  for (const auto& [key, value] : counts) c[i++] = value;
  return entropy_bits(c);
}

QuasirandomReport quasirandomness_suite(const std::vector<int>& symbols, int alphabet_size,
                                        const QuasirandomConfig& config) {
  if (alphabet_size < 2) throw ValidationError("alphabet_size", "alphabet_size: must be >= 2");
  if (symbols.size() < static_cast<std::size_t>(10 * alphabet_size))
    throw ValidationError("words", "words: sequence shorter than 10 x alphabet_size",
                          "sequence_too_short");
  for (const int s : symbols)
    if (s < 0 || s >= alphabet_size)
      throw ValidationError("words", "words: symbol outside the alphabet", "invalid_symbol");

  QuasirandomReport r;
  r.alphabet_size = alphabet_size;
  r.length = symbols.size();

  for (int lag = 1; lag <= config.max_lag; ++lag) {
    if (symbols.size() <= static_cast<std::size_t>(lag)) break;
    const std::vector<int> head(symbols.begin(), symbols.end() - lag);
    const std::vector<int> shifted(symbols.begin() + lag, symbols.end());
    r.serial_correlation.push_back(cramers_v(head, shifted));
  }

  Vector counts = Vector::Zero(alphabet_size);
  for (const int s : symbols) counts[s] += 1.0;
  const double expected = static_cast<double>(symbols.size()) / alphabet_size;
  r.chi_square = (counts.array() - expected).square().sum() / expected;
  r.dof = alphabet_size - 1;
  r.chi_square_p = chi_square_sf(r.chi_square, r.dof);

  for (int n = 1; n <= 3; ++n) r.entropy_rate.push_back(block_entropy(symbols, n) / n);

  r.serial_ok = std::all_of(r.serial_correlation.begin(), r.serial_correlation.end(),
                            [&](double v) { return v < config.max_cramers_v; });
  r.uniform_ok = r.chi_square_p > config.min_chi_square_p;
  r.entropy_ok = r.entropy_rate[0] >= config.min_entropy_fraction * std::log2(alphabet_size);
  r.overall = r.serial_ok && r.uniform_ok && r.entropy_ok;
  return r;
}

ResonanceReport detect_resonance(const std::vector<int>& v, const std::vector<int>& omega,
                                 const std::vector<double>& phi_summary,
                                 const ResonanceConfig& config, std::uint64_t seed) {
  if (v.size() != omega.size()) throw ValidationError("words", "words: length mismatch");
  if (!phi_summary.empty() && phi_summary.size() != omega.size())
    throw ValidationError("phi_summary", "phi_summary: length mismatch");
  if (config.window < 2) throw ValidationError("resonance.window", "resonance.window: must be >= 2");
  if (v.size() < static_cast<std::size_t>(config.window))
    throw ValidationError("words", "words: shorter than the window", "sequence_too_short");
  if (config.n_surrogates < 200)
    throw ValidationError("resonance.n_surrogates", "resonance.n_surrogates: must be >= 200");
  if (config.max_lag < 0) throw ValidationError("resonance.max_lag", "resonance.max_lag: must be >= 0");

  ResonanceReport r;
  r.window = config.window;
  if (degenerate(v) || degenerate(omega)) {
    r.median_mi_per_lag.assign(static_cast<std::size_t>(config.max_lag + 1), 0.0);
    return r;
  }

  const int nv = symbol_count(v);
  const int no = symbol_count(omega);
  const LagScan observed = scan_lags(v, omega, config.window, config.max_lag, nv, no);
  r.lag = observed.lag;
  r.statistic = observed.statistic;
  r.median_mi_per_lag = observed.medians;
  r.mi_per_window = observed.best_windows;

  Rng rng(seed, "resonance/surrogates");
  std::vector<double> null;
  std::vector<int> shuffled = v;
  for (int s = 0; s < config.n_surrogates; ++s) {
    rng.shuffle(shuffled);
    null.push_back(scan_lags(shuffled, omega, config.window, config.max_lag, nv, no).statistic);
  }
  r.null_mean = std::accumulate(null.begin(), null.end(), 0.0) / static_cast<double>(null.size());
  r.null_p95 = nearest_rank(null, 0.95);
  const auto exceed = std::count_if(null.begin(), null.end(), [&](double x) { return x >= r.statistic; });
  r.p_value = (1.0 + static_cast<double>(exceed)) / (1.0 + static_cast<double>(null.size()));
  r.detected = r.statistic > r.null_p95;

  if (!phi_summary.empty()) {
    // aligned pairs (v_{n-lag}, ω_n) binned by quartile of φ summary at n
    const auto lag = static_cast<std::size_t>(r.lag);
    std::vector<std::size_t> order;
    for (std::size_t n = lag; n < omega.size(); ++n) order.push_back(n);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return phi_summary[a] < phi_summary[b]; });
    const std::size_t bins = 4;
    Rng bin_rng(seed, "resonance/phi-bins");
    r.phi_bins_all_above = order.size() >= bins;
    for (std::size_t b = 0; b < bins; ++b) {
      const std::size_t lo = b * order.size() / bins;
      const std::size_t hi = (b + 1) * order.size() / bins;
      std::vector<int> bv, bo;
      for (std::size_t i = lo; i < hi; ++i) {
        bv.push_back(v[order[i] - lag]);
        bo.push_back(omega[order[i]]);
      }
      const double mi = bv.empty() ? 0.0 : mutual_information(bv, bo);
      std::vector<double> bin_null;
      std::vector<int> sv = bv;
      for (int s = 0; s < config.n_surrogates && !bv.empty(); ++s) {
        bin_rng.shuffle(sv);
        bin_null.push_back(mutual_information(sv, bo));
      }
      const double p95 = nearest_rank(bin_null, 0.95);
      r.phi_conditioned_mi.push_back(mi);
      r.phi_bin_null_p95.push_back(p95);
      r.phi_bins_all_above = r.phi_bins_all_above && mi > p95;
    }
  }
  return r;
}

EnsembleReport detect_resonance_ensemble(const std::vector<ResonanceRun>& runs,
                                         const ResonanceConfig& config, std::uint64_t seed) {
  EnsembleReport out;
  std::size_t detected = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    out.runs.push_back(detect_resonance(runs[i].v, runs[i].omega, runs[i].phi_summary, config,
                                        stream_seed(seed, "ensemble/" + std::to_string(i))));
    detected += out.runs.back().detected ? 1 : 0;
  }
  if (!runs.empty()) out.detection_rate = static_cast<double>(detected) / static_cast<double>(runs.size());
  return out;
}

// ---------------------------------------------------------------------------

Prediction predict_next_word(const WordSequence& history, const EpsilonTrace& trace,
                             const CellPartition& partition, const PredictorConfig& config) {
  if (history.entries.size() < 3)
    throw ValidationError("history", "history: at least 3 sets are required", "insufficient_history");
  if (trace.empty()) throw ValidationError("trace", "trace: empty", "insufficient_history");

  Prediction out;
  const double dt = trace.dt;
  const long steps = std::max(1L, std::lround(median_duration(history) / dt));
  const double horizon = static_cast<double>(steps) * dt;
  out.timescale_ratio = timescale_ratio(trace, history);
  out.applicable = out.timescale_ratio < 1.0;

  const PredictionModel model = fit_predictor(trace, config);
  const Matrix path = forecast_path(trace, model, horizon);

  RunningMean mean;
  std::map<int, int> cells;
  for (Eigen::Index s = 1; s < path.rows(); ++s) {
    mean.add(dt, path.row(s - 1).transpose(), path.row(s).transpose());
    ++cells[assign_cell(path.row(s).transpose(), partition)];
  }
  out.forecast_mean = mean.value();
  out.symbol = assign_cell(out.forecast_mean, partition);
  int modal = 0;
  for (const auto& [cell, count] : cells) modal = std::max(modal, count);
  out.confidence = static_cast<double>(modal) / static_cast<double>(path.rows() - 1);
  if (!out.applicable)
    out.confidence = std::min(out.confidence, 1.0 / static_cast<double>(partition.n_cells()));
  return out;
}

std::size_t BetLedger::hits() const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const BetEntry& e) {
    return e.predicted == e.actual;
  }));
}

void settle_in_place(BetLedger& ledger, std::size_t set, int predicted, int actual, double stake) {
  if (!(stake > 0.0) || !std::isfinite(stake))
    throw ValidationError("stake", "stake: must be > 0", "invalid_stake");
  if (predicted < 0 || predicted >= ledger.alphabet_size)
    throw ValidationError("symbol", "symbol: outside the alphabet", "invalid_symbol");
  for (const auto& e : ledger.entries)
    if (e.set == set)
      throw ValidationError("set", "set: already settled", "duplicate_set");
  BetEntry e{set, predicted, actual, stake,
             predicted == actual ? stake * (ledger.alphabet_size - 1) : -stake};
  ledger.balance += e.payoff;
  ledger.entries.push_back(e);
}

BetLedger settle_bet(BetLedger ledger, std::size_t set, int predicted, int actual, double stake) {
  settle_in_place(ledger, set, predicted, actual, stake);
  return ledger;
}

}  // namespace kr
