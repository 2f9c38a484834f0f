#pragma once

#include "kr/harness.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace kr {

/// Player 1 is the human seat: its pure control is held at the submitted
/// value for the whole set. Other players keep their configured policies.
EngineConfig session_engine_config(const ScenarioConfig& config);

struct Action {
  std::optional<std::pair<int, double>> bet;  // symbol, stake
  Vector control;                             // empty means zero
};

/// Parses and checks an action body against the session's bounds.
Action parse_action(const Json& body, const ScenarioConfig& config);

/// Turn-based sessions over the perception engine. Snapshots carry only
/// observables: words, balance and the resonance indicator.
class SessionService {
 public:
  struct Response {
    int status = 200;
    Json body;
  };

  Json create(const Json& config);
  Json snapshot(const std::string& id) const;
  Json submit_action(const std::string& id, const Json& body);
  Json advance(const std::string& id);

  /// Transport-free routing; the HTTP binding forwards here.
  Response handle(const std::string& method, const std::string& path, const std::string& body);

 private:
  struct Session {
    ScenarioConfig config;
    std::unique_ptr<PerceptionEngine> engine;
    BetLedger ledger;
    std::optional<Action> pending;
    bool finished = false;
    ResonanceReport resonance;
    bool resonance_ready = false;
    std::mutex mutex;
  };

  std::shared_ptr<Session> find(const std::string& id) const;
  static Json snapshot_of(const Session& s);

  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

/// HTTP binding of a SessionService (JSON bodies, error bodies
/// {code, field?, message}).
class HttpServer {
 public:
  explicit HttpServer(SessionService& service);
  ~HttpServer();

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace kr
