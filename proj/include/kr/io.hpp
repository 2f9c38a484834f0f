#pragma once

#include "kr/dynamics.hpp"
#include "kr/epsilon.hpp"
#include "kr/roulette.hpp"
#include "kr/stages.hpp"
#include "kr/verbalization.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace kr {

using Json = nlohmann::ordered_json;

// CSV writers use 17 significant digits so every value reads back exactly.

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
/// Reads observables back (ε truth is never part of this file).
Trajectory read_trajectory_csv(std::istream& in);

/// `t,eps_p_c` columns; also used for the revealed ground truth.
void write_epsilon_csv(std::ostream& out, const EpsilonTrace& trace);
EpsilonTrace read_epsilon_csv(std::istream& in);

void write_words_csv(std::ostream& out, const WordSequence& words);
/// Symbols and times only; raw values live in the JSON sidecar.
WordSequence read_words_csv(std::istream& in);
Json words_sidecar(const WordSequence& words, const CellPartition& omega_partition,
                   const CellPartition& control_partition);
WordSequence words_from_sidecar(const Json& j);

void write_ledger_csv(std::ostream& out, const BetLedger& ledger);
BetLedger read_ledger_csv(std::istream& in, int alphabet_size);

Json to_json(const QuasirandomReport& r);
QuasirandomReport quasirandom_from_json(const Json& j);
Json to_json(const ResonanceReport& r);
ResonanceReport resonance_from_json(const Json& j);
Json to_json(const PredictionModel& m);
PredictionModel prediction_model_from_json(const Json& j);
Json to_json(const SetRecord& r);
SetRecord set_record_from_json(const Json& j);
Json to_json(const CellPartition& p);
CellPartition partition_from_json(const Json& j, const std::string& field);

/// One SetRecord per line.
void write_match_log(std::ostream& out, const std::vector<SetRecord>& sets);
std::vector<SetRecord> read_match_log(std::istream& in);

/// Lower-case hex SHA-256 of a byte string / file.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace kr
