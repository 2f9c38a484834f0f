#include "kr/session.hpp"
#include "support.hpp"

#include <doctest.h>
#include <httplib.h>

#include <thread>

using namespace kr;

namespace {

const char* kConfig = R"({"scenario": "KR-1R", "seed": 7, "n_sets": 12, "resonance": {"window": 4}})";

void collect_keys(const Json& j, std::vector<std::string>& keys) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      keys.push_back(k);
      collect_keys(v, keys);
    }
  } else if (j.is_array()) {
    for (const auto& v : j) collect_keys(v, keys);
  }
}

Json control_json(double a, double b) { return Json::array({a, b}); }

}  // namespace

TEST_CASE("session lifecycle") {
  SessionService service;
  const auto created = service.handle("POST", "/session", kConfig);
  REQUIRE(created.status == 201);
  const std::string id = created.body["id"];
  const Json snap = created.body["snapshot"];
  CHECK(snap["set_index"] == 0);
  CHECK(snap["phase"] == "awaiting_action");
  CHECK(snap["words"].empty());
  CHECK(snap["balance"] == 0.0);
  CHECK(snap["alphabet_size"] == 4);
  CHECK(snap["bounds"]["control_min"] == -1.0);
  CHECK(snap["resonance"]["detected"] == false);

  for (int k = 0; k < 12; ++k) {
    const auto r = service.handle("POST", "/session/" + id + "/advance", "");
    REQUIRE(r.status == 200);
    CHECK(r.body["set_index"] == k + 1);
    CHECK(r.body["words"].size() == static_cast<std::size_t>(k + 1));
  }
  const auto snap_end = service.handle("GET", "/session/" + id + "/snapshot", "");
  CHECK(snap_end.body["phase"] == "finished");
  CHECK(snap_end.body["resonance"]["threshold"].is_number());
  // Missing actions: no bets were placed.
  CHECK(snap_end.body["balance"] == 0.0);

  const auto late = service.handle("POST", "/session/" + id + "/advance", "");
  CHECK(late.status == 409);
  CHECK(late.body["code"] == "session_finished");
  CHECK(service.handle("POST", "/session/" + id + "/action", R"({"control": [0, 0]})").status == 409);
}

TEST_CASE("session errors") {
  SessionService service;
  const std::string id = service.create(Json::parse(kConfig))["id"];
  const std::string base = "/session/" + id;

  auto check = [&](const SessionService::Response& r, int status, const std::string& code) {
    CHECK(r.status == status);
    CHECK(r.body["code"] == code);
    CHECK(r.body["message"].is_string());
  };
  check(service.handle("GET", "/session/nope/snapshot", ""), 404, "not_found");
  check(service.handle("POST", base + "/action", "{oops"), 400, "parse_error");
  check(service.handle("POST", base + "/action", R"({"bet": {"symbol": 4, "stake": 1}})"), 400, "invalid_symbol");
  check(service.handle("POST", base + "/action", R"({"bet": {"symbol": 1, "stake": 101}})"), 400, "invalid_stake");
  check(service.handle("POST", base + "/action", R"({"bet": {"symbol": 1, "stake": -1}})"), 400, "invalid_stake");
  check(service.handle("POST", base + "/action", R"({"control": [2, 0]})"), 400, "out_of_bounds");
  check(service.handle("POST", base + "/action", R"({"control": [0]})"), 400, "validation_error");
  check(service.handle("POST", base + "/action", R"({"wager": 1})"), 400, "validation_error");
  check(service.handle("GET", base + "/advance", ""), 405, "method_not_allowed");
  check(service.handle("GET", "/elsewhere", ""), 404, "not_found");

  const auto bad = service.handle("POST", "/session", R"({"scenario": "KR-7"})");
  check(bad, 400, "validation_error");
  CHECK(bad.body["field"] == "scenario");

  // Within credit: balance 0 + limit 100.
  CHECK(service.handle("POST", base + "/action", R"({"bet": {"symbol": 1, "stake": 100}})").status == 200);
}

TEST_CASE("last action wins and bets settle") {
  SessionService service;
  const std::string id = service.create(Json::parse(kConfig))["id"];
  service.submit_action(id, Json{{"bet", {{"symbol", 0}, {"stake", 5}}}});
  service.submit_action(id, Json{{"bet", {{"symbol", 2}, {"stake", 1}}}, {"control", control_json(0.5, 0.5)}});
  const Json snap = service.advance(id);
  const int actual = snap["words"][0]["omega_symbol"];
  CHECK(snap["balance"] == (actual == 2 ? 3.0 : -1.0));

  // Pending actions are consumed by advance.
  const Json next = service.advance(id);
  CHECK(next["balance"] == snap["balance"]);
}

TEST_CASE("snapshots expose no hidden state") {
  SessionService service;
  const std::string id = service.create(Json::parse(kConfig))["id"];
  std::vector<std::string> keys;
  for (int k = 0; k < 12; ++k) {
    service.submit_action(id, Json{{"bet", {{"symbol", k % 4}, {"stake", 1}}}, {"control", control_json(0.1, -0.1)}});
    collect_keys(service.advance(id), keys);
  }
  const std::string dump = service.snapshot(id).dump();
  for (const auto& k : keys) {
    REQUIRE(k.find("eps") == std::string::npos);
    REQUIRE(k.find("hidden") == std::string::npos);
    REQUIRE(k.find("truth") == std::string::npos);
    REQUIRE(k != "omega_value");
    REQUIRE(k != "phi");
    REQUIRE(k != "xi");
  }
  CHECK(dump.find("memory") == std::string::npos);
}

TEST_CASE("session replays the in-process engine") {
  const ScenarioConfig config = parse_config(kConfig);
  std::vector<Vector> controls;
  Rng rng(5, "test/controls");
  for (int k = 0; k < 12; ++k) {
    Vector c(2);
    c << rng.uniform(-1, 1), rng.uniform(-1, 1);
    controls.push_back(c);
  }

  SessionService service;
  const std::string id = service.create(Json::parse(kConfig))["id"];
  Json snap;
  for (int k = 0; k < 12; ++k) {
    service.submit_action(id, Json{{"control", control_json(controls[k][0], controls[k][1])},
                                   {"bet", {{"symbol", k % 4}, {"stake", 1}}}});
    snap = service.advance(id);
  }

  PerceptionEngine engine(session_engine_config(config));
  const auto match = engine.run_match(12, [&](std::size_t k, PerceptionEngine& e) {
    e.policies().player(0).hold(controls[k]);
  });
  BetLedger ledger;
  for (std::size_t k = 0; k < 12; ++k) {
    REQUIRE(snap["words"][k]["omega_symbol"] == match.words.entries[k].omega_symbol);
    REQUIRE(snap["words"][k]["v_symbol"] == match.words.entries[k].v_symbol);
    settle_in_place(ledger, k, static_cast<int>(k % 4), match.words.entries[k].omega_symbol, 1.0);
  }
  CHECK(snap["balance"] == ledger.balance);
  const auto report = detect_resonance(match.words.v_symbols(), match.words.omega_symbols(), {},
                                       config.resonance, stream_seed(config.seed, "resonance"));
  CHECK(snap["resonance"]["mi"] == report.statistic);
  CHECK(snap["resonance"]["detected"] == report.detected);
}

TEST_CASE("http binding") {
  SessionService service;
  HttpServer server(service);
  const int port = server.bind("127.0.0.1", 0);
  std::thread thread([&] { server.listen(); });

  httplib::Client client("127.0.0.1", port);
  const auto created = client.Post("/session", kConfig, "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const Json c = Json::parse(created->body);
  const std::string id = c["id"];

  const auto act = client.Post("/session/" + id + "/action", R"({"control": [0.2, -0.2]})", "application/json");
  REQUIRE(act);
  CHECK(act->status == 200);
  const auto adv = client.Post("/session/" + id + "/advance", "", "application/json");
  REQUIRE(adv);
  CHECK(Json::parse(adv->body)["set_index"] == 1);
  const auto snap = client.Get("/session/" + id + "/snapshot");
  REQUIRE(snap);
  CHECK(snap->get_header_value("Content-Type") == "application/json");
  CHECK(Json::parse(snap->body)["words"].size() == 1);
  const auto missing = client.Get("/session/zzz/snapshot");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  CHECK(Json::parse(missing->body)["code"] == "not_found");

  server.stop();
  thread.join();
}
