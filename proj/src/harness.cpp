#include "kr/harness.hpp"
#include "kr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace kr {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

void check_keys(const Json& j, const std::string& field, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ValidationError(field.empty() ? "config" : field,
                                            (field.empty() ? "config" : field) + ": must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      std::vector<std::string> names(allowed.begin(), allowed.end());
      const std::string path = field.empty() ? key : field + "." + key;
      throw ValidationError(path, path + ": unknown key (known: " + join(names) + ")");
    }
  }
}

template <typename T>
void read(const Json& j, const std::string& key, const std::string& field, T& out) {
  if (!j.contains(key)) return;
  const std::string path = field.empty() ? key : field + "." + key;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(path, path + ": wrong type");
  }
}

void read_params(const Json& j, const std::string& key, const std::string& field, Params& out) {
  if (!j.contains(key)) return;
  const std::string path = field + "." + key;
  const Json& p = j.at(key);
  if (!p.is_object()) throw ValidationError(path, path + ": must be an object of numbers");
  out.clear();
  for (const auto& [name, value] : p.items()) {
    if (!value.is_number()) throw ValidationError(path + "." + name, path + "." + name + ": must be a number");
    out[name] = value.get<double>();
  }
}

Json params_json(const Params& p) {
  Json j = Json::object();
  for (const auto& [k, v] : p) j[k] = v;
  return j;
}

PolicySpec policy_from_json(const Json& j, const std::string& field) {
  check_keys(j, field, {"id", "params"});
  PolicySpec spec;
  read(j, "id", field, spec.id);
  read_params(j, "params", field, spec.params);
  return spec;
}

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace

// ---------------------------------------------------------------------------
// Scenarios

std::vector<std::string> known_scenarios() { return {"KR-1", "KR-1R", "custom"}; }

ScenarioConfig scenario_defaults(const std::string& scenario) {
  const auto known = known_scenarios();
  if (std::find(known.begin(), known.end(), scenario) == known.end())
    throw ValidationError("scenario", "scenario: unknown id '" + scenario + "' (known: " + join(known) + ")");
  ScenarioConfig c;
  c.scenario = scenario;
  c.coupling.eps_dim = 2;
  c.policies = {PolicySpec{"random-hold", {}}};
  c.predicate = PredicateSpec{"wheel-sector", {{"sectors", 4.0}}};
  c.omega_partition.cuts = {{0.0}, {0.0}, {}, {}};
  c.control_partition.cuts = {{}, {}, {0.0}, {0.0}};
  c.phi_params = {{"alpha", 1.0}, {"radius", 1.0}, {"omega", std::numbers::pi / 2.0},
                  {"push", std::numbers::pi / 8.0}};
  c.xi_params = {{"tau", 1.0}};
  if (scenario == "KR-1") {
    c.hidden.kind = HiddenBehaviorSpec::Kind::lorenz_like;
    c.hidden.time_scale = 4.0;
    c.hidden.fold = 5.0;
  } else if (scenario == "KR-1R") {
    c.hidden.kind = HiddenBehaviorSpec::Kind::lagged_mirror;
    c.hidden.source_player = 1;
    c.hidden.target_player = 0;
    c.hidden.lag = 1;
    c.hidden.gain = 1.0;
    c.hidden.memory = 0.65;
  } else {
    c.hidden.kind = HiddenBehaviorSpec::Kind::oscillator;
    c.hidden.frequencies = {1.3, 0.7, 1.1, 0.9};
  }
  return c;
}

// ---------------------------------------------------------------------------
// Config I/O

ScenarioConfig config_from_json(const Json& j) {
  check_keys(j, "", {"scenario", "seed", "dt", "n_sets", "horizon", "set_length", "max_set_duration",
                     "alphabet_size", "game", "coupling", "hidden", "policies", "predicate", "partition",
                     "predictor", "resonance", "quasirandom", "betting", "control_bounds", "output_dir"});
  std::string scenario = "KR-1";
  read(j, "scenario", "", scenario);
  ScenarioConfig c = scenario_defaults(scenario);

  read(j, "seed", "", c.seed);
  read(j, "dt", "", c.dt);
  read(j, "n_sets", "", c.n_sets);
  read(j, "horizon", "", c.horizon);
  read(j, "set_length", "", c.set_length);
  read(j, "max_set_duration", "", c.max_set_duration);
  read(j, "alphabet_size", "", c.alphabet_size);

  if (j.contains("game")) {
    const Json& g = j.at("game");
    check_keys(g, "game", {"phi_rhs", "phi_params", "xi_rhs", "xi_params"});
    read(g, "phi_rhs", "game", c.phi_rhs);
    read_params(g, "phi_params", "game", c.phi_params);
    read(g, "xi_rhs", "game", c.xi_rhs);
    read_params(g, "xi_params", "game", c.xi_params);
  }
  if (j.contains("coupling")) {
    const Json& g = j.at("coupling");
    check_keys(g, "coupling", {"form", "scale", "bias_weight"});
    std::string form = to_string(c.coupling.form);
    read(g, "form", "coupling", form);
    c.coupling.form = parse_coupling_form(form);
    read(g, "scale", "coupling", c.coupling.scale);
    read(g, "bias_weight", "coupling", c.coupling.bias_weight);
  }
  if (j.contains("hidden")) {
    const Json& h = j.at("hidden");
    check_keys(h, "hidden", {"kind", "amplitude", "frequencies", "sigma", "rho", "beta", "time_scale",
                             "fold", "burn_in", "source_player", "target_player", "lag", "gain", "memory"});
    std::string kind = to_string(c.hidden.kind);
    read(h, "kind", "hidden", kind);
    c.hidden.kind = parse_hidden_kind(kind);
    read(h, "amplitude", "hidden", c.hidden.amplitude);
    read(h, "frequencies", "hidden", c.hidden.frequencies);
    read(h, "sigma", "hidden", c.hidden.sigma);
    read(h, "rho", "hidden", c.hidden.rho);
    read(h, "beta", "hidden", c.hidden.beta);
    read(h, "time_scale", "hidden", c.hidden.time_scale);
    read(h, "fold", "hidden", c.hidden.fold);
    read(h, "burn_in", "hidden", c.hidden.burn_in);
    int source = c.hidden.source_player + 1, target = c.hidden.target_player + 1;
    read(h, "source_player", "hidden", source);
    read(h, "target_player", "hidden", target);
    c.hidden.source_player = source - 1;
    c.hidden.target_player = target - 1;
    read(h, "lag", "hidden", c.hidden.lag);
    read(h, "gain", "hidden", c.hidden.gain);
    read(h, "memory", "hidden", c.hidden.memory);
  }
  if (j.contains("policies")) {
    const Json& p = j.at("policies");
    if (!p.is_array() || p.empty()) throw ValidationError("policies", "policies: must be a nonempty array");
    c.policies.clear();
    for (std::size_t i = 0; i < p.size(); ++i)
      c.policies.push_back(policy_from_json(p[i], "policies[" + std::to_string(i) + "]"));
  }
  if (j.contains("predicate")) {
    const Json& p = j.at("predicate");
    check_keys(p, "predicate", {"id", "params"});
    read(p, "id", "predicate", c.predicate.id);
    read_params(p, "params", "predicate", c.predicate.params);
  }
  if (j.contains("partition")) {
    const Json& p = j.at("partition");
    check_keys(p, "partition", {"omega_cuts", "control_cuts", "hysteresis"});
    read(p, "omega_cuts", "partition", c.omega_partition.cuts);
    read(p, "control_cuts", "partition", c.control_partition.cuts);
    read(p, "hysteresis", "partition", c.omega_partition.hysteresis);
  }
  if (j.contains("predictor")) {
    const Json& p = j.at("predictor");
    check_keys(p, "predictor", {"order", "fit_window", "history"});
    read(p, "order", "predictor", c.predictor.order);
    read(p, "fit_window", "predictor", c.predictor.fit_window);
    read(p, "history", "predictor", c.predictor_history);
  }
  if (j.contains("resonance")) {
    const Json& p = j.at("resonance");
    check_keys(p, "resonance", {"window", "n_surrogates", "max_lag"});
    read(p, "window", "resonance", c.resonance.window);
    read(p, "n_surrogates", "resonance", c.resonance.n_surrogates);
    read(p, "max_lag", "resonance", c.resonance.max_lag);
  }
  if (j.contains("quasirandom")) {
    const Json& p = j.at("quasirandom");
    check_keys(p, "quasirandom", {"max_lag"});
    read(p, "max_lag", "quasirandom", c.quasirandom.max_lag);
  }
  if (j.contains("betting")) {
    const Json& p = j.at("betting");
    check_keys(p, "betting", {"stake", "credit_limit"});
    read(p, "stake", "betting", c.stake);
    read(p, "credit_limit", "betting", c.credit_limit);
  }
  if (j.contains("control_bounds")) {
    const Json& p = j.at("control_bounds");
    check_keys(p, "control_bounds", {"min", "max"});
    read(p, "min", "control_bounds", c.control_min);
    read(p, "max", "control_bounds", c.control_max);
  }
  if (j.contains("output_dir")) {
    std::string dir;
    read(j, "output_dir", "", dir);
    c.output_dir = dir;
  }
  validate(c);
  return c;
}

ScenarioConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte);
    std::ostringstream os;
    os << "config: parse error at line " << line << ", column " << column;
    throw ValidationError("config", os.str(), "parse_error");
  }
  return config_from_json(j);
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("config", "config: cannot open " + path.string(), "io_error");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

Json emit_config(const ScenarioConfig& c) {
  Json policies = Json::array();
  for (const auto& p : c.policies) policies.push_back({{"id", p.id}, {"params", params_json(p.params)}});
  const auto& h = c.hidden;
  Json j{{"scenario", c.scenario},
         {"seed", c.seed},
         {"dt", c.dt},
         {"n_sets", c.n_sets},
         {"horizon", c.horizon},
         {"set_length", c.set_length},
         {"max_set_duration", c.max_set_duration},
         {"alphabet_size", c.alphabet_size},
         {"game",
          {{"phi_rhs", c.phi_rhs},
           {"phi_params", params_json(c.phi_params)},
           {"xi_rhs", c.xi_rhs},
           {"xi_params", params_json(c.xi_params)}}},
         {"coupling",
          {{"form", to_string(c.coupling.form)}, {"scale", c.coupling.scale}, {"bias_weight", c.coupling.bias_weight}}},
         {"hidden",
          {{"kind", to_string(h.kind)},
           {"amplitude", h.amplitude},
           {"frequencies", h.frequencies},
           {"sigma", h.sigma},
           {"rho", h.rho},
           {"beta", h.beta},
           {"time_scale", h.time_scale},
           {"fold", h.fold},
           {"burn_in", h.burn_in},
           {"source_player", h.source_player + 1},
           {"target_player", h.target_player + 1},
           {"lag", h.lag},
           {"gain", h.gain},
           {"memory", h.memory}}},
         {"policies", policies},
         {"predicate", {{"id", c.predicate.id}, {"params", params_json(c.predicate.params)}}},
         {"partition",
          {{"omega_cuts", c.omega_partition.cuts},
           {"control_cuts", c.control_partition.cuts},
           {"hysteresis", c.omega_partition.hysteresis}}},
         {"predictor",
          {{"order", c.predictor.order}, {"fit_window", c.predictor.fit_window}, {"history", c.predictor_history}}},
         {"resonance",
          {{"window", c.resonance.window},
           {"n_surrogates", c.resonance.n_surrogates},
           {"max_lag", c.resonance.max_lag}}},
         {"quasirandom", {{"max_lag", c.quasirandom.max_lag}}},
         {"betting", {{"stake", c.stake}, {"credit_limit", c.credit_limit}}},
         {"control_bounds", {{"min", c.control_min}, {"max", c.control_max}}}};
  if (c.output_dir) j["output_dir"] = *c.output_dir;
  return j;
}

void validate(const ScenarioConfig& c) {
  auto require = [](bool ok, const std::string& field, const std::string& message) {
    if (!ok) throw ValidationError(field, field + ": " + message);
  };
  scenario_defaults(c.scenario);
  require(c.dt > 0.0 && std::isfinite(c.dt), "dt", "must be > 0");
  require(c.n_sets >= 1, "n_sets", "must be >= 1");
  require(c.horizon >= c.dt, "horizon", "must be >= dt");
  require(c.set_length > 0.0, "set_length", "must be > 0");
  require(c.max_set_duration > 0.0 && std::isfinite(c.max_set_duration), "max_set_duration",
          "must be finite and > 0");
  c.omega_partition.validate("partition.omega_cuts");
  c.control_partition.validate("partition.control_cuts");
  require(c.omega_partition.dim() == 4, "partition.omega_cuts", "needs 4 axes (player, component)");
  require(c.control_partition.dim() == 4, "partition.control_cuts", "needs 4 axes (player, component)");
  require(c.alphabet_size == c.omega_partition.n_cells(), "alphabet_size",
          "must equal the number of ω cells (" + std::to_string(c.omega_partition.n_cells()) + ")");
  require(c.policies.size() == 1 || c.policies.size() == 2, "policies", "give one policy or one per player");
  const auto policies = known_policies();
  for (const auto& p : c.policies)
    require(std::find(policies.begin(), policies.end(), p.id) != policies.end(), "policies",
            "unknown id '" + p.id + "' (known: " + join(policies) + ")");
  make_predicate(c.predicate);
  require(c.predictor.order >= 1, "predictor.order", "must be >= 1");
  require(c.predictor.fit_window > c.predictor.order, "predictor.fit_window", "must exceed order");
  require(c.predictor_history >= c.predictor.fit_window, "predictor.history", "must be >= fit_window");
  require(c.resonance.window >= 2, "resonance.window", "must be >= 2");
  require(c.resonance.n_surrogates >= 200, "resonance.n_surrogates", "must be >= 200");
  require(c.resonance.max_lag >= 0, "resonance.max_lag", "must be >= 0");
  require(c.quasirandom.max_lag >= 1, "quasirandom.max_lag", "must be >= 1");
  require(c.stake > 0.0, "betting.stake", "must be > 0");
  require(c.credit_limit >= 0.0, "betting.credit_limit", "must be >= 0");
  require(c.control_min < c.control_max, "control_bounds", "min must be < max");
  build_game(c).validate();
}

GameDefinition build_game(const ScenarioConfig& c) {
  GameDefinition g;
  g.state_dim = 2;
  g.intention_dim = 2;
  g.n_players = 2;
  g.control_dim = 2;
  g.phi_rhs = c.phi_rhs;
  g.phi_params = c.phi_params;
  g.xi_rhs = c.xi_rhs;
  g.xi_params = c.xi_params;
  CouplingSpec coupling = c.coupling;
  coupling.eps_dim = g.control_dim;
  g.couplings.assign(2, coupling);
  g.hidden = c.hidden;
  g.phi0 = Vector(2);
  g.phi0 << 1.0, 0.0;
  return g;
}

EngineConfig engine_config(const ScenarioConfig& c) {
  EngineConfig e;
  e.game = build_game(c);
  e.policies = c.policies;
  e.dt = c.dt;
  e.seed = c.seed;
  e.omega_partition = c.omega_partition;
  e.omega_partition.hysteresis = 0.0;
  e.control_partition = c.control_partition;
  e.predicate = c.predicate;
  e.max_duration = c.max_set_duration;
  return e;
}

// ---------------------------------------------------------------------------
// Betting

EpsilonTrace betting_trace(const PerceptionEngine& engine, int history) {
  EpsilonTrace tr = engine.recovered_tail(history + 1);
  if (tr.size() > 0) {
    tr.values.conservativeResize(tr.size() - 1, Eigen::NoChange);
    tr.t.conservativeResize(tr.t.size() - 1);
  }
  return tr;
}

RouletteRun play_roulette(PerceptionEngine& engine, const ScenarioConfig& config) {
  RouletteRun run;
  run.ledger.alphabet_size = config.alphabet_size;
  const auto hook = [&](std::size_t k, PerceptionEngine& e) {
    if (e.words().entries.size() < 3) return;
    const EpsilonTrace tr = betting_trace(e, config.predictor_history);
    if (tr.size() < static_cast<Eigen::Index>(config.predictor.fit_window)) return;
    run.predictions.push_back(
        predict_next_word(e.words(), tr, config.omega_partition, config.predictor));
    run.bet_sets.push_back(k);
  };
  run.match = engine.run_match(static_cast<std::size_t>(config.n_sets), hook);
  const auto& words = run.match.words.entries;
  for (std::size_t i = 0; i < run.bet_sets.size(); ++i) {
    const std::size_t k = run.bet_sets[i];
    settle_in_place(run.ledger, k, run.predictions[i].symbol, words[k].omega_symbol, config.stake);
  }
  return run;
}

// ---------------------------------------------------------------------------
// Artifacts

namespace {

struct ArtifactWriter {
  std::filesystem::path dir;
  Json files = Json::object();

  explicit ArtifactWriter(std::filesystem::path d) : dir(std::move(d)) {
    std::filesystem::create_directories(dir);
  }

  void text(const std::string& name, const std::string& content) {
    write_text(dir / name, content);
    files[name] = sha256_hex(content);
  }

  template <typename F>
  void stream(const std::string& name, F&& fill) {
    std::ostringstream os;
    fill(os);
    text(name, os.str());
  }

  Json finish(const std::string& command, const ScenarioConfig& config) {
    ScenarioConfig echo = config;
    echo.output_dir.reset();
    const std::string config_text = emit_config(echo).dump(2) + "\n";
    text("config.json", config_text);
    Json manifest{{"command", command}, {"config", emit_config(echo)}, {"files", files}};
    std::string all;
    for (const auto& [name, hash] : files.items()) all += name + ":" + hash.get<std::string>() + "\n";
    manifest["run_hash"] = sha256_hex(all);
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    return manifest;
  }
};

Trajectory simulate_config(const ScenarioConfig& c) {
  return simulate(build_game(c), c.horizon, c.dt, c.policies, c.seed, c.set_length);
}

void write_match_words(ArtifactWriter& w, const ScenarioConfig& c, const WordSequence& words) {
  w.stream("words.csv", [&](std::ostream& os) { write_words_csv(os, words); });
  w.text("words.json", words_sidecar(words, c.omega_partition, c.control_partition).dump(2) + "\n");
}

std::vector<double> phi_summaries(const std::vector<SetRecord>& sets) {
  std::vector<double> out;
  for (const auto& s : sets) out.push_back(s.phi_summary);
  return out;
}

}  // namespace

void run_simulate(const ScenarioConfig& c, const std::filesystem::path& out_dir, bool reveal_hidden) {
  const Trajectory traj = simulate_config(c);
  ArtifactWriter w(out_dir);
  w.stream("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj); });
  if (reveal_hidden)
    w.stream("eps_truth.csv", [&](std::ostream& os) {
      write_epsilon_csv(os, ground_truth_trace(traj, oracle_access()));
    });
  w.finish("simulate", c);
}

void run_verbalize(const ScenarioConfig& c, const std::filesystem::path& out_dir, bool reveal_hidden) {
  const GameDefinition game = build_game(c);
  const Trajectory traj = simulate_config(c);
  const EpsilonTrace eps = recover_epsilon(traj, game);
  const WordSequence words = emit_words(eps, traj, c.omega_partition, c.control_partition);
  ArtifactWriter w(out_dir);
  w.stream("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj); });
  w.stream("epsilon.csv", [&](std::ostream& os) { write_epsilon_csv(os, eps); });
  if (reveal_hidden)
    w.stream("eps_truth.csv", [&](std::ostream& os) {
      write_epsilon_csv(os, ground_truth_trace(traj, oracle_access()));
    });
  write_match_words(w, c, words);
  w.finish("verbalize", c);
}

void run_resonance(const ScenarioConfig& c, const std::filesystem::path& out_dir) {
  PerceptionEngine engine(engine_config(c));
  const MatchResult match = engine.run_match(static_cast<std::size_t>(c.n_sets));
  const auto& words = match.words;
  ArtifactWriter w(out_dir);
  write_match_words(w, c, words);
  w.stream("match.jsonl", [&](std::ostream& os) { write_match_log(os, match.sets); });
  if (words.entries.size() >= static_cast<std::size_t>(10 * c.alphabet_size))
    w.text("quasirandom.json",
           to_json(quasirandomness_suite(words.omega_symbols(), c.alphabet_size, c.quasirandom)).dump(2) + "\n");
  w.text("resonance.json", to_json(detect_resonance(words.v_symbols(), words.omega_symbols(),
                                                    phi_summaries(match.sets), c.resonance,
                                                    stream_seed(c.seed, "resonance")))
                                   .dump(2) + "\n");
  w.finish("resonance", c);
}

void run_bet(const ScenarioConfig& c, const std::filesystem::path& out_dir) {
  PerceptionEngine engine(engine_config(c));
  const RouletteRun run = play_roulette(engine, c);
  ArtifactWriter w(out_dir);
  write_match_words(w, c, run.match.words);
  w.stream("ledger.csv", [&](std::ostream& os) { write_ledger_csv(os, run.ledger); });
  w.finish("bet", c);
}

ExperimentResult run_experiment(const ScenarioConfig& c, const std::filesystem::path& out_dir,
                                bool reveal_hidden) {
  validate(c);
  ExperimentResult result;
  PerceptionEngine engine(engine_config(c));
  result.run = play_roulette(engine, c);
  const auto& words = result.run.match.words;
  result.recovered = engine.recovered_tail(0);

  ArtifactWriter w(out_dir);
  w.stream("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, engine.trajectory()); });
  w.stream("epsilon.csv", [&](std::ostream& os) { write_epsilon_csv(os, result.recovered); });
  if (reveal_hidden)
    w.stream("eps_truth.csv", [&](std::ostream& os) {
      write_epsilon_csv(os, ground_truth_trace(engine.trajectory(), oracle_access()));
    });
  write_match_words(w, c, words);
  w.stream("match.jsonl", [&](std::ostream& os) { write_match_log(os, result.run.match.sets); });

  if (words.entries.size() >= static_cast<std::size_t>(10 * c.alphabet_size)) {
    result.quasirandom = quasirandomness_suite(words.omega_symbols(), c.alphabet_size, c.quasirandom);
    w.text("quasirandom.json", to_json(result.quasirandom).dump(2) + "\n");
  }
  if (words.entries.size() >= static_cast<std::size_t>(c.resonance.window)) {
    result.resonance = detect_resonance(words.v_symbols(), words.omega_symbols(),
                                        phi_summaries(result.run.match.sets), c.resonance,
                                        stream_seed(c.seed, "resonance"));
    w.text("resonance.json", to_json(result.resonance).dump(2) + "\n");
  }
  if (words.entries.size() >= 3) {
    result.timescale_ratio = timescale_ratio(result.recovered, words);
    w.text("timescale.json", Json{{"timescale_ratio", result.timescale_ratio},
                                  {"applicable", result.timescale_ratio < 1.0}}
                                     .dump(2) + "\n");
  }
  w.stream("ledger.csv", [&](std::ostream& os) { write_ledger_csv(os, result.run.ledger); });
  result.manifest = w.finish("run", c);
  return result;
}

Json error_json(const std::exception& e) {
  Json j = Json::object();
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
    j["code"] = v->code();
    j["field"] = v->field();
  } else if (const auto* k = dynamic_cast<const Error*>(&e)) {
    j["code"] = k->code();
  } else {
    j["code"] = "internal_error";
  }
  j["message"] = e.what();
  return j;
}

}  // namespace kr
