#include "kr/verbalization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace kr {

int CellPartition::n_cells() const {
  int n = 1;
  for (const auto& axis : cuts) n *= static_cast<int>(axis.size()) + 1;
  return n;
}

std::vector<int> CellPartition::bins(int cell) const {
  std::vector<int> out(cuts.size());
  for (int c = dim() - 1; c >= 0; --c) {
    const int radix = static_cast<int>(cuts[c].size()) + 1;
    out[c] = cell % radix;
    cell /= radix;
  }
  return out;
}

int CellPartition::cell(const std::vector<int>& b) const {
  int id = 0;
  for (int c = 0; c < dim(); ++c) id = id * (static_cast<int>(cuts[c].size()) + 1) + b[c];
  return id;
}

void CellPartition::validate(const std::string& field) const {
  if (cuts.empty()) throw ValidationError(field, field + ": needs at least one axis");
  if (!(hysteresis >= 0.0)) throw ValidationError(field, field + ": hysteresis must be >= 0");
  for (const auto& axis : cuts)
    for (std::size_t i = 0; i < axis.size(); ++i) {
      if (!std::isfinite(axis[i])) throw ValidationError(field, field + ": cut points must be finite");
      if (i > 0 && !(axis[i] > axis[i - 1]))
        throw ValidationError(field, field + ": cut points must be strictly increasing");
    }
}

CellPartition sign_partition(int dim, const std::vector<int>& split_components) {
  CellPartition p;
  p.cuts.assign(static_cast<std::size_t>(dim), {});
  for (const int c : split_components) p.cuts.at(static_cast<std::size_t>(c)) = {0.0};
  return p;
}

int assign_cell(const Vector& eps, const CellPartition& partition, std::optional<int> previous_cell) {
  if (eps.size() != partition.dim())
    throw ValidationError("eps", "eps: dimension does not match the partition");
  const double inf = std::numeric_limits<double>::infinity();
  if (previous_cell && partition.hysteresis > 0.0 && *previous_cell >= 0 &&
      *previous_cell < partition.n_cells()) {
    const auto b = partition.bins(*previous_cell);
    bool inside = true;
    for (int c = 0; c < partition.dim() && inside; ++c) {
      const auto& axis = partition.cuts[c];
      const double lo = b[c] == 0 ? -inf : axis[b[c] - 1];
      const double hi = b[c] == static_cast<int>(axis.size()) ? inf : axis[b[c]];
      inside = eps[c] > lo - partition.hysteresis && eps[c] <= hi + partition.hysteresis;
    }
    if (inside) return *previous_cell;
  }
  std::vector<int> b(partition.cuts.size());
  for (int c = 0; c < partition.dim(); ++c) {
    const auto& axis = partition.cuts[c];
    b[c] = static_cast<int>(std::lower_bound(axis.begin(), axis.end(), eps[c]) - axis.begin());
  }
  return partition.cell(b);
}

std::vector<Transition> detect_transitions(const EpsilonTrace& trace,
                                           const CellPartition& partition) {
  std::vector<Transition> out;
  if (trace.empty()) return out;
  int running = assign_cell(trace.values.row(0).transpose(), partition);
  out.push_back({0, trace.t[0], running});
  for (Eigen::Index k = 1; k < trace.size(); ++k) {
    const int cell = assign_cell(trace.values.row(k).transpose(), partition, running);
    if (cell != running) {
      running = cell;
      out.push_back({static_cast<std::size_t>(k), trace.t[k], cell});
    }
  }
  return out;
}

std::vector<int> WordSequence::omega_symbols() const {
  std::vector<int> out;
  out.reserve(entries.size());
  for (const auto& w : entries) out.push_back(w.omega_symbol);
  return out;
}

std::vector<int> WordSequence::v_symbols() const {
  std::vector<int> out;
  out.reserve(entries.size());
  for (const auto& w : entries) out.push_back(w.v_symbol);
  return out;
}

double median_duration(const WordSequence& words) {
  if (words.entries.empty()) return 0.0;
  std::vector<double> d;
  d.reserve(words.entries.size());
  for (const auto& w : words.entries) d.push_back(w.t_end - w.t_start);
  std::sort(d.begin(), d.end());
  const std::size_t m = d.size() / 2;
  return d.size() % 2 == 1 ? d[m] : 0.5 * (d[m - 1] + d[m]);
}

void RunningMean::add(double h, const Vector& a, const Vector& b) {
  const Vector segment = 0.5 * (a + b);
  if (value_.size() == 0) value_ = Vector::Zero(segment.size());
  if (h <= 0.0) return;
  weight_ += h;
  value_ += (h / weight_) * (segment - value_);
}

std::vector<std::string> known_functionals() { return {"mean"}; }

Vector stacked_pure(const Sample& s) {
  Eigen::Index n = 0;
  for (const auto& u : s.u_pure) n += u.size();
  Vector out(n);
  Eigen::Index at = 0;
  for (const auto& u : s.u_pure) {
    out.segment(at, u.size()) = u;
    at += u.size();
  }
  return out;
}

WordSequence emit_words(const EpsilonTrace& trace, const Trajectory& traj,
                        const CellPartition& omega_partition,
                        const CellPartition& control_partition,
                        const std::vector<std::size_t>& boundaries,
                        const std::string& functional) {
  const auto known = known_functionals();
  if (std::find(known.begin(), known.end(), functional) == known.end())
    throw ValidationError("functional", "functional: unknown id '" + functional + "' (known: mean)");
  if (static_cast<std::size_t>(trace.size()) != traj.size())
    throw ValidationError("trace", "trace: not aligned with the trajectory");

  WordSequence out;
  out.alphabet_size = omega_partition.n_cells();
  if (boundaries.empty()) return out;

  Vector prev_omega = trace.values.row(static_cast<Eigen::Index>(boundaries[0])).transpose();
  Vector prev_v = stacked_pure(traj[boundaries[0]]);
  int n = 0;
  for (std::size_t i = 1; i < boundaries.size(); ++i) {
    const std::size_t a = boundaries[i - 1];
    const std::size_t b = boundaries[i];
    if (b < a || b >= traj.size())
      throw ValidationError("boundaries", "boundaries: must be increasing sample indices");
    if (traj[b].t == traj[a].t) {
      std::ostringstream os;
      os << "empty interval at t=" << traj[a].t << " skipped";
      out.warnings.push_back(os.str());
      continue;
    }
    RunningMean omega(prev_omega);
    RunningMean v(prev_v);
    for (std::size_t k = a + 1; k <= b; ++k) {
      const double h = traj[k].t - traj[k - 1].t;
      const auto ki = static_cast<Eigen::Index>(k);
      omega.add(h, trace.values.row(ki - 1).transpose(), trace.values.row(ki).transpose());
      v.add(h, stacked_pure(traj[k - 1]), stacked_pure(traj[k]));
    }
    Word w;
    w.n = ++n;
    w.t_start = traj[a].t;
    w.t_end = traj[b].t;
    w.omega_value = omega.value();
    w.omega_symbol = assign_cell(w.omega_value, omega_partition);
    w.v_value = v.value();
    w.v_symbol = assign_cell(w.v_value, control_partition);
    prev_omega = w.omega_value;
    prev_v = w.v_value;
    out.entries.push_back(std::move(w));
  }
  return out;
}

WordSequence emit_words(const EpsilonTrace& trace, const Trajectory& traj,
                        const CellPartition& omega_partition,
                        const CellPartition& control_partition, const std::string& functional) {
  std::vector<std::size_t> boundaries;
  for (const auto& tr : detect_transitions(trace, omega_partition)) boundaries.push_back(tr.sample);
  if (!traj.empty() && (boundaries.empty() || boundaries.back() != traj.size() - 1))
    boundaries.push_back(traj.size() - 1);
  return emit_words(trace, traj, omega_partition, control_partition, boundaries, functional);
}

}  // namespace kr
