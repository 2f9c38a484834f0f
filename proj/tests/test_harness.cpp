#include "kr/harness.hpp"
#include "kr/io.hpp"
#include "kr/rng.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace kr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("kr_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string error_field(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ValidationError& e) {
    return e.field() + "|" + e.what();
  }
  return "";
}

ScenarioConfig random_config(Rng& rng) {
  const auto ids = known_scenarios();
  ScenarioConfig c = scenario_defaults(ids[rng.below(ids.size())]);
  c.seed = rng.next();
  c.dt = 0.005 * static_cast<double>(1 + rng.below(4));
  c.n_sets = 1 + static_cast<int>(rng.below(500));
  c.horizon = rng.uniform(1.0, 50.0);
  c.max_set_duration = rng.uniform(0.5, 10.0);
  c.coupling.form = rng.below(2) ? CouplingSpec::Form::additive : CouplingSpec::Form::affine_gain;
  c.coupling.scale = rng.uniform(0.1, 2.0);
  c.hidden.amplitude = rng.uniform(0.1, 3.0);
  c.hidden.memory = rng.uniform(0.0, 0.9);
  c.hidden.fold = rng.uniform(0.0, 10.0);
  c.phi_params["push"] = rng.uniform(0.0, 1.0);
  c.policies = {PolicySpec{"random-hold", {{"min", -rng.uniform()}, {"max", rng.uniform()}}},
                PolicySpec{"sine", {{"omega", rng.uniform(0.1, 3.0)}}}};
  c.omega_partition.hysteresis = rng.below(2) ? 0.0 : rng.uniform(0.0, 0.1);
  c.predictor.order = 1 + static_cast<int>(rng.below(4));
  c.resonance.window = 16 + static_cast<int>(rng.below(64));
  c.stake = rng.uniform(0.5, 3.0);
  if (rng.below(2)) c.output_dir = "out/" + std::to_string(rng.below(100));
  return c;
}

}  // namespace

TEST_CASE("minimal config takes the defaults") {
  const auto c = parse_config(R"({"scenario": "KR-1", "seed": 1})");
  CHECK(c.seed == 1);
  CHECK(c.dt == 0.01);
  CHECK(c.n_sets == 200);
  CHECK(c.alphabet_size == 4);
  CHECK(c.hidden.kind == HiddenBehaviorSpec::Kind::lorenz_like);
  CHECK(parse_config(R"({"scenario": "KR-1R"})").hidden.kind == HiddenBehaviorSpec::Kind::lagged_mirror);
}

TEST_CASE("config errors name the problem") {
  const auto unknown = error_field(R"({"scenario": "KR-2"})");
  CHECK(unknown.find("scenario|") == 0);
  CHECK(unknown.find("KR-1, KR-1R, custom") != std::string::npos);

  try {
    parse_config("{\n  \"seed\": 1,\n  oops\n}");
    FAIL("expected parse error");
  } catch (const ValidationError& e) {
    CHECK(e.code() == "parse_error");
    CHECK(std::string(e.what()).find("line 3, column 3") != std::string::npos);
  }

  CHECK(error_field(R"({"sead": 1})").find("sead|") == 0);
  CHECK(error_field(R"({"scenario": "KR-1R", "hidden": {"memory": 1.5}})").find("hidden.memory|") == 0);
  CHECK(error_field(R"({"dt": "fast"})").find("dt|") == 0);
  CHECK(error_field(R"({"dt": 0})").find("dt|") == 0);
  CHECK(error_field(R"({"alphabet_size": 8})").find("alphabet_size|") == 0);
  CHECK(error_field(R"({"resonance": {"n_surrogates": 99}})").find("resonance.n_surrogates|") == 0);
  CHECK(error_field(R"({"policies": [{"id": "psychic"}]})").find("policies|") == 0);
  CHECK(error_field(R"({"predicate": {"id": "omega-cell"}})").find("predicate|") == 0);
}

TEST_CASE("config round trip") {
  Rng rng(77, "test/configs");
  for (int i = 0; i < 100; ++i) {
    const ScenarioConfig c = random_config(rng);
    validate(c);
    const auto back = parse_config(emit_config(c).dump());
    REQUIRE(back == c);
    REQUIRE(emit_config(back) == emit_config(c));
  }
}

TEST_CASE("csv and json artifacts read back") {
  const auto config = test::scenario("KR-1R", 2, 30);
  PerceptionEngine engine(engine_config(config));
  const auto run = play_roulette(engine, config);
  const Trajectory& traj = engine.trajectory();

  std::stringstream ts;
  write_trajectory_csv(ts, traj);
  const std::string header = ts.str().substr(0, ts.str().find('\n'));
  CHECK(header ==
        "t,phi_1,phi_2,xi_1,xi_2,upure_1_1,upure_1_2,upure_2_1,upure_2_2,"
        "ucoup_1_1,ucoup_1_2,ucoup_2_1,ucoup_2_2");
  const Trajectory back = read_trajectory_csv(ts);
  REQUIRE(back.size() == traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) REQUIRE(back[k] == traj[k]);

  std::stringstream es;
  const auto eps = engine.recovered_tail(0);
  write_epsilon_csv(es, eps);
  CHECK(es.str().rfind("t,eps_1_1,eps_1_2,eps_2_1,eps_2_2\n", 0) == 0);
  CHECK(read_epsilon_csv(es).values == eps.values);

  const auto& words = run.match.words;
  std::stringstream ws;
  write_words_csv(ws, words);
  const auto wback = read_words_csv(ws);
  REQUIRE(wback.entries.size() == words.entries.size());
  CHECK(wback.omega_symbols() == words.omega_symbols());
  CHECK(wback.v_symbols() == words.v_symbols());
  const auto sidecar = words_from_sidecar(
      Json::parse(words_sidecar(words, config.omega_partition, config.control_partition).dump()));
  for (std::size_t i = 0; i < words.entries.size(); ++i)
    REQUIRE(same_vector(sidecar.entries[i].omega_value, words.entries[i].omega_value));

  std::stringstream ls;
  write_ledger_csv(ls, run.ledger);
  CHECK(ls.str().rfind("set,predicted,actual,stake,payoff,balance\n", 0) == 0);
  const auto lback = read_ledger_csv(ls, 4);
  CHECK(lback.balance == run.ledger.balance);
  CHECK(lback.entries.size() == run.ledger.entries.size());

  std::stringstream ms;
  write_match_log(ms, run.match.sets);
  const auto sets = read_match_log(ms);
  REQUIRE(sets.size() == run.match.sets.size());
  CHECK(sets.back().sample_end == run.match.sets.back().sample_end);
  CHECK(sets.back().phi_summary == run.match.sets.back().phi_summary);
  CHECK(same_vector(sets.back().end.phi, run.match.sets.back().end.phi));

  const auto model = fit_predictor(eps, config.predictor);
  const auto mback = prediction_model_from_json(Json::parse(to_json(model).dump()));
  CHECK(mback.coefficients == model.coefficients);
  CHECK(mback.fallback == model.fallback);
  CHECK(to_json(model).contains("window"));

  std::stringstream bad("t,phi_1\n0.0,abc\n");
  CHECK_THROWS_AS(read_trajectory_csv(bad), ValidationError);
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("bets close before the set boundary") {
  const auto config = test::scenario("KR-1", 1, 5);
  PerceptionEngine engine(engine_config(config));
  engine.run_match(5);
  const auto visible = betting_trace(engine, 100);
  const auto all = engine.recovered_tail(0);
  CHECK(visible.size() == 100);
  CHECK(visible.t[99] == all.t[all.size() - 2]);
  CHECK(visible.values.row(99) == all.values.row(all.size() - 2));
}

TEST_CASE("run_experiment is reproducible and keeps ε hidden") {
  auto config = test::scenario("KR-1R", 11, 80);
  const fs::path da = scratch("a"), db = scratch("b"), dc = scratch("c"), dd = scratch("d");
  const auto a = run_experiment(config, da);
  const auto b = run_experiment(config, db);
  CHECK(a.manifest == b.manifest);
  CHECK(a.manifest["files"].contains("ledger.csv"));
  CHECK_FALSE(a.manifest["files"].contains("eps_truth.csv"));
  CHECK_FALSE(fs::exists(da / "eps_truth.csv"));
  // Hashes describe the files on disk.
  for (const auto& [name, hash] : a.manifest["files"].items())
    CHECK(sha256_file(db / name) == hash.get<std::string>());

  const auto revealed = run_experiment(config, dc, true);
  CHECK(revealed.manifest["files"].contains("eps_truth.csv"));
  CHECK(revealed.manifest["files"]["trajectory.csv"] == a.manifest["files"]["trajectory.csv"]);

  // The echoed config reproduces the run.
  const auto echo = load_config(da / "config.json");
  CHECK(echo == config);

  config.seed = 12;
  CHECK(run_experiment(config, dd).manifest["run_hash"] != a.manifest["run_hash"]);
  for (const auto& d : {da, db, dc, dd}) fs::remove_all(d);
}

TEST_CASE("error bodies") {
  const auto v = error_json(ValidationError("dt", "dt: must be > 0"));
  CHECK(v["code"] == "validation_error");
  CHECK(v["field"] == "dt");
  CHECK(v["message"] == "dt: must be > 0");
  const auto r = error_json(IntegrationDiverged(3, 1.5));
  CHECK(r["code"] == "integration_diverged");
  CHECK_FALSE(r.contains("field"));
}
