#include "kr/session.hpp"

#include <httplib.h>

#include <cmath>
#include <regex>

namespace kr {

EngineConfig session_engine_config(const ScenarioConfig& config) {
  EngineConfig e = engine_config(config);
  e.policies = {PolicySpec{"held", {}}, config.policies.back()};
  return e;
}

Action parse_action(const Json& body, const ScenarioConfig& config) {
  if (!body.is_object()) throw ValidationError("action", "action: must be an object");
  for (const auto& [key, value] : body.items())
    if (key != "bet" && key != "control")
      throw ValidationError(key, key + ": unknown key (known: bet, control)");

  Action action;
  if (body.contains("bet") && !body.at("bet").is_null()) {
    const Json& bet = body.at("bet");
    if (!bet.is_object() || !bet.contains("symbol") || !bet.contains("stake"))
      throw ValidationError("bet", "bet: needs symbol and stake");
    if (!bet.at("symbol").is_number_integer())
      throw ValidationError("bet.symbol", "bet.symbol: must be an integer", "invalid_symbol");
    if (!bet.at("stake").is_number())
      throw ValidationError("bet.stake", "bet.stake: must be a number", "invalid_stake");
    const int symbol = bet.at("symbol").get<int>();
    const double stake = bet.at("stake").get<double>();
    if (symbol < 0 || symbol >= config.alphabet_size)
      throw ValidationError("bet.symbol", "bet.symbol: outside the alphabet", "invalid_symbol");
    if (!std::isfinite(stake) || stake < 0.0)
      throw ValidationError("bet.stake", "bet.stake: must be >= 0", "invalid_stake");
    if (stake > 0.0) action.bet = std::make_pair(symbol, stake);
  }
  if (body.contains("control") && !body.at("control").is_null()) {
    const Json& c = body.at("control");
    const int dim = build_game(config).control_dim;
    if (!c.is_array() || static_cast<int>(c.size()) != dim)
      throw ValidationError("control", "control: needs " + std::to_string(dim) + " numbers");
    action.control = Vector(dim);
    for (int i = 0; i < dim; ++i) {
      if (!c[i].is_number()) throw ValidationError("control", "control: needs numbers");
      const double x = c[i].get<double>();
      if (!(x >= config.control_min && x <= config.control_max))
        throw ValidationError("control", "control: outside bounds", "out_of_bounds");
      action.control[i] = x;
    }
  }
  return action;
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error("not_found", "session " + id + " does not exist");
  return it->second;
}

Json SessionService::snapshot_of(const Session& s) {
  Json words = Json::array();
  for (const auto& w : s.engine->words().entries)
    words.push_back({{"n", w.n}, {"omega_symbol", w.omega_symbol}, {"v_symbol", w.v_symbol}});
  Json resonance{{"mi", s.resonance_ready ? s.resonance.statistic : 0.0},
                 {"threshold", s.resonance_ready ? Json(s.resonance.null_p95) : Json(nullptr)},
                 {"detected", s.resonance_ready && s.resonance.detected}};
  return Json{{"set_index", s.engine->next_set_index()},
              {"phase", s.finished ? "finished" : "awaiting_action"},
              {"words", words},
              {"balance", s.ledger.balance},
              {"resonance", resonance},
              {"bounds", {{"control_min", s.config.control_min}, {"control_max", s.config.control_max}}},
              {"alphabet_size", s.config.alphabet_size}};
}

Json SessionService::create(const Json& config_json) {
  auto s = std::make_shared<Session>();
  s->config = config_from_json(config_json);
  s->engine = std::make_unique<PerceptionEngine>(session_engine_config(s->config));
  s->ledger.alphabet_size = s->config.alphabet_size;
  std::string id;
  {
    std::lock_guard lock(mutex_);
    id = "s" + std::to_string(next_id_++);
    sessions_[id] = s;
  }
  std::lock_guard lock(s->mutex);
  return Json{{"id", id}, {"snapshot", snapshot_of(*s)}};
}

Json SessionService::snapshot(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  return snapshot_of(*s);
}

Json SessionService::submit_action(const std::string& id, const Json& body) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  if (s->finished) throw Error("session_finished", "session " + id + " is finished");
  Action action = parse_action(body, s->config);
  if (action.bet && action.bet->second > s->ledger.balance + s->config.credit_limit)
    throw ValidationError("bet.stake", "bet.stake: exceeds balance plus credit limit", "invalid_stake");
  s->pending = std::move(action);
  return snapshot_of(*s);
}

Json SessionService::advance(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  if (s->finished) throw Error("session_finished", "session " + id + " is finished");
  const Action action = s->pending.value_or(Action{});
  s->pending.reset();

  const int dim = s->engine->config().game.control_dim;
  const Vector control = action.control.size() ? action.control : Vector::Zero(dim);
  const PerceptionEngine::SetHook hook = [&](std::size_t, PerceptionEngine& e) {
    e.policies().player(0).hold(control);
  };
  const std::size_t k = s->engine->next_set_index();
  s->engine->run_match(1, hook);
  if (action.bet)
    settle_in_place(s->ledger, k, action.bet->first, s->engine->words().entries.back().omega_symbol,
                    action.bet->second);

  const WordSequence& words = s->engine->words();
  if (words.entries.size() >= static_cast<std::size_t>(s->config.resonance.window)) {
    s->resonance = detect_resonance(words.v_symbols(), words.omega_symbols(), {}, s->config.resonance,
                                    stream_seed(s->config.seed, "resonance"));
    s->resonance_ready = true;
  }
  if (s->engine->next_set_index() >= static_cast<std::size_t>(s->config.n_sets)) s->finished = true;
  return snapshot_of(*s);
}

SessionService::Response SessionService::handle(const std::string& method, const std::string& path,
                                                 const std::string& body) {
  static const std::regex session_path(R"(^/session/([A-Za-z0-9_-]+)/(snapshot|action|advance)$)");
  auto parse_body = [&]() -> Json {
    if (body.empty()) return Json::object();
    try {
      return Json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("body", std::string("body: invalid JSON (") + e.what() + ")", "parse_error");
    }
  };
  try {
    std::smatch m;
    if (path == "/session") {
      if (method != "POST") return {405, {{"code", "method_not_allowed"}, {"message", "use POST"}}};
      return {201, create(parse_body())};
    }
    if (std::regex_match(path, m, session_path)) {
      const std::string id = m[1], verb = m[2];
      const std::string want = verb == "snapshot" ? "GET" : "POST";
      if (method != want) return {405, {{"code", "method_not_allowed"}, {"message", "use " + want}}};
      if (verb == "snapshot") return {200, snapshot(id)};
      if (verb == "action") return {200, submit_action(id, parse_body())};
      return {200, advance(id)};
    }
    return {404, {{"code", "not_found"}, {"message", "no route " + path}}};
  } catch (const ValidationError& e) {
    return {400, error_json(e)};
  } catch (const Error& e) {
    const int status = e.code() == "not_found" ? 404 : e.code() == "session_finished" ? 409 : 500;
    return {status, error_json(e)};
  } catch (const std::exception& e) {
    return {500, error_json(e)};
  }
}

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(SessionService& service) : impl_(std::make_unique<Impl>()) {
  const auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    const auto r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  impl_->server.Post("/session", forward);
  impl_->server.Get(R"(/session/[^/]+/snapshot)", forward);
  impl_->server.Post(R"(/session/[^/]+/(action|advance))", forward);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error("io_error", "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace kr
