#pragma once

#include "kr/dynamics.hpp"
#include "kr/epsilon.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kr {

/// Axis-aligned rectangular partition. An axis with no cuts is not split.
/// Cell ids are mixed-radix with component 0 most significant.
struct CellPartition {
  std::vector<std::vector<double>> cuts;
  double hysteresis = 0.0;

  int dim() const { return static_cast<int>(cuts.size()); }
  int n_cells() const;
  /// Per-axis bin index of a cell id.
  std::vector<int> bins(int cell) const;
  int cell(const std::vector<int>& bins) const;
  void validate(const std::string& field = "partition") const;

  friend bool operator==(const CellPartition&, const CellPartition&) = default;
};

/// Sign partition on selected components of a `dim`-dimensional space.
CellPartition sign_partition(int dim, const std::vector<int>& split_components);

/// Grid cell of eps; a value exactly on a cut belongs to the lower cell.
/// With a previous cell, eps stays there while it is inside that cell's box
/// widened by the hysteresis margin.
int assign_cell(const Vector& eps, const CellPartition& partition,
                std::optional<int> previous_cell = std::nullopt);

struct Transition {
  std::size_t sample = 0;
  double t = 0.0;
  int cell = 0;
  friend bool operator==(const Transition&, const Transition&) = default;
};

/// First entry is the first sample; every other entry is the first sample
/// whose hysteresis-adjusted cell differs from the running cell.
std::vector<Transition> detect_transitions(const EpsilonTrace& trace,
                                           const CellPartition& partition);

struct Word {
  int n = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  int omega_symbol = 0;
  Vector omega_value;
  int v_symbol = 0;
  Vector v_value;
};

struct WordSequence {
  std::vector<Word> entries;
  int alphabet_size = 0;
  std::vector<std::string> warnings;

  std::vector<int> omega_symbols() const;
  std::vector<int> v_symbols() const;
};

double median_duration(const WordSequence& words);

/// Time average over [t_0, t_k] folded one trapezoid segment at a time.
/// Seeding with the previous interval's value at weight zero makes the
/// fold an update Ω(ω_{n-1}, segment data) whose result does not depend
/// on the seed once any positive weight has been added.
class RunningMean {
 public:
  RunningMean() = default;
  explicit RunningMean(Vector seed) : value_(std::move(seed)) {}

  void add(double h, const Vector& a, const Vector& b);
  const Vector& value() const { return value_; }
  double weight() const { return weight_; }

 private:
  Vector value_;
  double weight_ = 0.0;
};

/// Interval functionals registered for ω and v. Only "mean" ships.
std::vector<std::string> known_functionals();

/// Words over the intervals [boundaries[i-1], boundaries[i]] (sample indices).
/// ω is the functional of ε mapped through `omega_partition`, v the
/// functional of the concatenated pure controls through `control_partition`.
WordSequence emit_words(const EpsilonTrace& trace, const Trajectory& traj,
                        const CellPartition& omega_partition,
                        const CellPartition& control_partition,
                        const std::vector<std::size_t>& boundaries,
                        const std::string& functional = "mean");

/// Words over the cell-transition intervals of `trace`, closed by the last sample.
WordSequence emit_words(const EpsilonTrace& trace, const Trajectory& traj,
                        const CellPartition& omega_partition,
                        const CellPartition& control_partition,
                        const std::string& functional = "mean");

/// Concatenated pure controls of a sample, (player, component) order.
Vector stacked_pure(const Sample& s);

}  // namespace kr
