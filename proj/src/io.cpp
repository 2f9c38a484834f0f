#include "kr/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace kr {

namespace {

std::string num(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_num(const std::string& s, const std::string& field) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ValidationError(field, field + ": not a number: '" + s + "'", "malformed_file");
  return v;
}

long parse_int(const std::string& s, const std::string& field) {
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ValidationError(field, field + ": not an integer: '" + s + "'", "malformed_file");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return true;
  }
  return false;
}

std::vector<std::string> header(std::istream& in, const std::string& what) {
  std::string line;
  if (!next_line(in, line)) throw ValidationError(what, what + ": missing header", "malformed_file");
  return split(line);
}

Json vec_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector json_vec(const Json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

// (player, component) from "prefix_p_c", 1-based in the file
std::pair<int, int> player_component(const std::string& name, const std::string& prefix) {
  const auto rest = name.substr(prefix.size());
  const auto us = rest.find('_');
  if (us == std::string::npos) throw ValidationError("header", "header: bad column " + name, "malformed_file");
  return {static_cast<int>(parse_int(rest.substr(0, us), "header")) - 1,
          static_cast<int>(parse_int(rest.substr(us + 1), "header")) - 1};
}

Json word_json(const Word& w) {
  return Json{{"n", w.n},
              {"t_start", w.t_start},
              {"t_end", w.t_end},
              {"omega_symbol", w.omega_symbol},
              {"omega_value", vec_json(w.omega_value)},
              {"v_symbol", w.v_symbol},
              {"v_value", vec_json(w.v_value)}};
}

Word json_word(const Json& j) {
  Word w;
  w.n = j.at("n").get<int>();
  w.t_start = j.at("t_start").get<double>();
  w.t_end = j.at("t_end").get<double>();
  w.omega_symbol = j.at("omega_symbol").get<int>();
  w.omega_value = json_vec(j.at("omega_value"));
  w.v_symbol = j.at("v_symbol").get<int>();
  w.v_value = json_vec(j.at("v_value"));
  return w;
}

}  // namespace

// ---------------------------------------------------------------------------

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  if (traj.empty()) return;
  const Sample& s0 = traj[0];
  out << "t";
  for (Eigen::Index i = 0; i < s0.phi.size(); ++i) out << ",phi_" << i + 1;
  for (Eigen::Index i = 0; i < s0.xi.size(); ++i) out << ",xi_" << i + 1;
  for (std::size_t p = 0; p < s0.u_pure.size(); ++p)
    for (Eigen::Index c = 0; c < s0.u_pure[p].size(); ++c) out << ",upure_" << p + 1 << '_' << c + 1;
  for (std::size_t p = 0; p < s0.u_coupled.size(); ++p)
    for (Eigen::Index c = 0; c < s0.u_coupled[p].size(); ++c) out << ",ucoup_" << p + 1 << '_' << c + 1;
  out << '\n';
  for (const Sample& s : traj.samples()) {
    out << num(s.t);
    for (Eigen::Index i = 0; i < s.phi.size(); ++i) out << ',' << num(s.phi[i]);
    for (Eigen::Index i = 0; i < s.xi.size(); ++i) out << ',' << num(s.xi[i]);
    for (const auto& u : s.u_pure)
      for (Eigen::Index c = 0; c < u.size(); ++c) out << ',' << num(u[c]);
    for (const auto& u : s.u_coupled)
      for (Eigen::Index c = 0; c < u.size(); ++c) out << ',' << num(u[c]);
    out << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& in) {
  const auto cols = header(in, "trajectory");
  if (cols.empty() || cols[0] != "t")
    throw ValidationError("trajectory", "trajectory: first column must be t", "malformed_file");
  int S = 0, I = 0, players = 0, comps = 0;
  for (const auto& c : cols) {
    if (c.rfind("phi_", 0) == 0) ++S;
    else if (c.rfind("xi_", 0) == 0) ++I;
    else if (c.rfind("upure_", 0) == 0) {
      const auto [p, k] = player_component(c, "upure_");
      players = std::max(players, p + 1);
      comps = std::max(comps, k + 1);
    }
  }
  const std::size_t expected = 1 + S + I + 2 * static_cast<std::size_t>(players * comps);
  if (cols.size() != expected)
    throw ValidationError("trajectory", "trajectory: inconsistent header", "malformed_file");

  std::vector<Sample> samples;
  std::string line;
  while (next_line(in, line)) {
    const auto cells = split(line);
    if (cells.size() != expected)
      throw ValidationError("trajectory", "trajectory: row has wrong column count", "malformed_file");
    std::size_t at = 0;
    Sample s;
    s.t = parse_num(cells[at++], "t");
    s.phi.resize(S);
    for (int i = 0; i < S; ++i) s.phi[i] = parse_num(cells[at++], "phi");
    s.xi.resize(I);
    for (int i = 0; i < I; ++i) s.xi[i] = parse_num(cells[at++], "xi");
    for (auto* block : {&s.u_pure, &s.u_coupled}) {
      block->assign(static_cast<std::size_t>(players), Vector(comps));
      for (int p = 0; p < players; ++p)
        for (int c = 0; c < comps; ++c) (*block)[p][c] = parse_num(cells[at++], "u");
    }
    samples.push_back(std::move(s));
  }
  const double dt = samples.size() >= 2 ? samples[1].t - samples[0].t : 0.0;
  Trajectory traj(dt);
  for (auto& s : samples) traj.append(std::move(s), {});
  return traj;
}

void write_epsilon_csv(std::ostream& out, const EpsilonTrace& trace) {
  out << "t";
  for (int p = 0; p < trace.n_players; ++p)
    for (int c = 0; c < trace.component_dim; ++c) out << ",eps_" << p + 1 << '_' << c + 1;
  out << '\n';
  for (Eigen::Index k = 0; k < trace.size(); ++k) {
    out << num(trace.t[k]);
    for (Eigen::Index j = 0; j < trace.values.cols(); ++j) out << ',' << num(trace.values(k, j));
    out << '\n';
  }
}

EpsilonTrace read_epsilon_csv(std::istream& in) {
  const auto cols = header(in, "epsilon");
  if (cols.empty() || cols[0] != "t")
    throw ValidationError("epsilon", "epsilon: first column must be t", "malformed_file");
  EpsilonTrace trace;
  for (std::size_t i = 1; i < cols.size(); ++i) {
    const auto [p, c] = player_component(cols[i], "eps_");
    trace.n_players = std::max(trace.n_players, p + 1);
    trace.component_dim = std::max(trace.component_dim, c + 1);
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  while (next_line(in, line)) {
    const auto cells = split(line);
    if (cells.size() != cols.size())
      throw ValidationError("epsilon", "epsilon: row has wrong column count", "malformed_file");
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_num(c, "eps"));
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  trace.t.resize(n);
  trace.values.resize(n, static_cast<Eigen::Index>(cols.size()) - 1);
  for (Eigen::Index k = 0; k < n; ++k) {
    trace.t[k] = rows[k][0];
    for (Eigen::Index j = 0; j < trace.values.cols(); ++j) trace.values(k, j) = rows[k][j + 1];
  }
  trace.dt = n >= 2 ? trace.t[1] - trace.t[0] : 0.0;
  return trace;
}

void write_words_csv(std::ostream& out, const WordSequence& words) {
  out << "n,t_start,t_end,omega_symbol,v_symbol\n";
  for (const auto& w : words.entries)
    out << w.n << ',' << num(w.t_start) << ',' << num(w.t_end) << ',' << w.omega_symbol << ','
        << w.v_symbol << '\n';
}

WordSequence read_words_csv(std::istream& in) {
  const auto cols = header(in, "words");
  if (cols != std::vector<std::string>{"n", "t_start", "t_end", "omega_symbol", "v_symbol"})
    throw ValidationError("words", "words: unexpected header", "malformed_file");
  WordSequence words;
  std::string line;
  while (next_line(in, line)) {
    const auto cells = split(line);
    if (cells.size() != 5) throw ValidationError("words", "words: bad row", "malformed_file");
    Word w;
    w.n = static_cast<int>(parse_int(cells[0], "n"));
    w.t_start = parse_num(cells[1], "t_start");
    w.t_end = parse_num(cells[2], "t_end");
    w.omega_symbol = static_cast<int>(parse_int(cells[3], "omega_symbol"));
    w.v_symbol = static_cast<int>(parse_int(cells[4], "v_symbol"));
    words.entries.push_back(std::move(w));
  }
  return words;
}

Json to_json(const CellPartition& p) {
  return Json{{"cuts", p.cuts}, {"hysteresis", p.hysteresis}};
}

CellPartition partition_from_json(const Json& j, const std::string& field) {
  CellPartition p;
  try {
    p.cuts = j.at("cuts").get<std::vector<std::vector<double>>>();
    if (j.contains("hysteresis")) p.hysteresis = j.at("hysteresis").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(field, field + ": " + e.what());
  }
  p.validate(field);
  return p;
}

Json words_sidecar(const WordSequence& words, const CellPartition& omega_partition,
                   const CellPartition& control_partition) {
  Json entries = Json::array();
  for (const auto& w : words.entries) entries.push_back(word_json(w));
  return Json{{"alphabet_size", words.alphabet_size},
              {"omega_partition", to_json(omega_partition)},
              {"control_partition", to_json(control_partition)},
              {"warnings", words.warnings},
              {"words", entries}};
}

WordSequence words_from_sidecar(const Json& j) {
  WordSequence words;
  words.alphabet_size = j.at("alphabet_size").get<int>();
  words.warnings = j.at("warnings").get<std::vector<std::string>>();
  for (const auto& e : j.at("words")) words.entries.push_back(json_word(e));
  return words;
}

void write_ledger_csv(std::ostream& out, const BetLedger& ledger) {
  out << "set,predicted,actual,stake,payoff,balance\n";
  double balance = 0.0;
  for (const auto& e : ledger.entries) {
    balance += e.payoff;
    out << e.set << ',' << e.predicted << ',' << e.actual << ',' << num(e.stake) << ','
        << num(e.payoff) << ',' << num(balance) << '\n';
  }
}

BetLedger read_ledger_csv(std::istream& in, int alphabet_size) {
  const auto cols = header(in, "ledger");
  if (cols != std::vector<std::string>{"set", "predicted", "actual", "stake", "payoff", "balance"})
    throw ValidationError("ledger", "ledger: unexpected header", "malformed_file");
  BetLedger ledger;
  ledger.alphabet_size = alphabet_size;
  std::string line;
  while (next_line(in, line)) {
    const auto cells = split(line);
    if (cells.size() != 6) throw ValidationError("ledger", "ledger: bad row", "malformed_file");
    settle_in_place(ledger, static_cast<std::size_t>(parse_int(cells[0], "set")),
                    static_cast<int>(parse_int(cells[1], "predicted")),
                    static_cast<int>(parse_int(cells[2], "actual")), parse_num(cells[3], "stake"));
    if (ledger.entries.back().payoff != parse_num(cells[4], "payoff") ||
        ledger.balance != parse_num(cells[5], "balance"))
      throw ValidationError("ledger", "ledger: payoff or balance inconsistent", "malformed_file");
  }
  return ledger;
}

Json to_json(const QuasirandomReport& r) {
  return Json{{"alphabet_size", r.alphabet_size},
              {"length", r.length},
              {"serial_correlation", r.serial_correlation},
              {"chi_square", {{"statistic", r.chi_square}, {"dof", r.dof}, {"p_value", r.chi_square_p}}},
              {"ngram_entropy_rate", r.entropy_rate},
              {"verdict",
               {{"serial", r.serial_ok},
                {"uniformity", r.uniform_ok},
                {"entropy", r.entropy_ok},
                {"overall", r.overall}}}};
}

QuasirandomReport quasirandom_from_json(const Json& j) {
  QuasirandomReport r;
  r.alphabet_size = j.at("alphabet_size").get<int>();
  r.length = j.at("length").get<std::size_t>();
  r.serial_correlation = j.at("serial_correlation").get<std::vector<double>>();
  r.chi_square = j.at("chi_square").at("statistic").get<double>();
  r.dof = j.at("chi_square").at("dof").get<int>();
  r.chi_square_p = j.at("chi_square").at("p_value").get<double>();
  r.entropy_rate = j.at("ngram_entropy_rate").get<std::vector<double>>();
  const auto& v = j.at("verdict");
  r.serial_ok = v.at("serial").get<bool>();
  r.uniform_ok = v.at("uniformity").get<bool>();
  r.entropy_ok = v.at("entropy").get<bool>();
  r.overall = v.at("overall").get<bool>();
  return r;
}

Json to_json(const ResonanceReport& r) {
  return Json{{"window", r.window},
              {"lag", r.lag},
              {"mi_per_window", r.mi_per_window},
              {"median_mi_per_lag", r.median_mi_per_lag},
              {"statistic", r.statistic},
              {"surrogate_null", {{"mean", r.null_mean}, {"p95", r.null_p95}}},
              {"p_value", r.p_value},
              {"detected", r.detected},
              {"phi_conditioned_mi", r.phi_conditioned_mi},
              {"phi_bin_null_p95", r.phi_bin_null_p95},
              {"phi_bins_all_above", r.phi_bins_all_above}};
}

ResonanceReport resonance_from_json(const Json& j) {
  ResonanceReport r;
  r.window = j.at("window").get<int>();
  r.lag = j.at("lag").get<int>();
  r.mi_per_window = j.at("mi_per_window").get<std::vector<double>>();
  r.median_mi_per_lag = j.at("median_mi_per_lag").get<std::vector<double>>();
  r.statistic = j.at("statistic").get<double>();
  r.null_mean = j.at("surrogate_null").at("mean").get<double>();
  r.null_p95 = j.at("surrogate_null").at("p95").get<double>();
  r.p_value = j.at("p_value").get<double>();
  r.detected = j.at("detected").get<bool>();
  r.phi_conditioned_mi = j.at("phi_conditioned_mi").get<std::vector<double>>();
  r.phi_bin_null_p95 = j.at("phi_bin_null_p95").get<std::vector<double>>();
  r.phi_bins_all_above = j.at("phi_bins_all_above").get<bool>();
  return r;
}

Json to_json(const PredictionModel& m) {
  Json coeffs = Json::array();
  for (Eigen::Index c = 0; c < m.coefficients.rows(); ++c)
    coeffs.push_back(vec_json(m.coefficients.row(c).transpose()));
  return Json{{"order", m.order}, {"window", m.fit_window}, {"coefficients", coeffs}, {"fallback", m.fallback}};
}

PredictionModel prediction_model_from_json(const Json& j) {
  PredictionModel m;
  m.order = j.at("order").get<int>();
  m.fit_window = j.at("window").get<int>();
  const auto& coeffs = j.at("coefficients");
  m.coefficients.resize(static_cast<Eigen::Index>(coeffs.size()), m.order);
  for (std::size_t c = 0; c < coeffs.size(); ++c)
    m.coefficients.row(static_cast<Eigen::Index>(c)) = json_vec(coeffs[c]).transpose();
  m.fallback = j.at("fallback").get<std::vector<bool>>();
  return m;
}

Json to_json(const SetRecord& r) {
  return Json{{"index", r.index},
              {"t_begin", r.t_begin},
              {"t_end", r.t_end},
              {"sample_begin", r.sample_begin},
              {"sample_end", r.sample_end},
              {"start_position", {{"phi", vec_json(r.start.phi)}, {"xi", vec_json(r.start.xi)}}},
              {"end_position", {{"phi", vec_json(r.end.phi)}, {"xi", vec_json(r.end.xi)}}},
              {"omega_at_start", word_json(r.omega_at_start)},
              {"finishing_reason", to_string(r.finishing_reason)},
              {"phi_summary", r.phi_summary}};
}

SetRecord set_record_from_json(const Json& j) {
  SetRecord r;
  r.index = j.at("index").get<std::size_t>();
  r.t_begin = j.at("t_begin").get<double>();
  r.t_end = j.at("t_end").get<double>();
  r.sample_begin = j.at("sample_begin").get<std::size_t>();
  r.sample_end = j.at("sample_end").get<std::size_t>();
  r.start = {json_vec(j.at("start_position").at("phi")), json_vec(j.at("start_position").at("xi"))};
  r.end = {json_vec(j.at("end_position").at("phi")), json_vec(j.at("end_position").at("xi"))};
  r.omega_at_start = json_word(j.at("omega_at_start"));
  const auto reason = j.at("finishing_reason").get<std::string>();
  r.finishing_reason = reason == "predicate" ? FinishingReason::predicate : FinishingReason::horizon;
  r.phi_summary = j.at("phi_summary").get<double>();
  return r;
}

void write_match_log(std::ostream& out, const std::vector<SetRecord>& sets) {
  for (const auto& s : sets) out << to_json(s).dump() << '\n';
}

std::vector<SetRecord> read_match_log(std::istream& in) {
  std::vector<SetRecord> out;
  std::string line;
  while (next_line(in, line)) out.push_back(set_record_from_json(Json::parse(line)));
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, md.data(), &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("hash_failed", "SHA-256 computation failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text(path)); }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("path", "cannot open " + path.string(), "io_error");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out << text;
}

}  // namespace kr
