// kr: command-line harness for the roulette experiments.

#include "kr/harness.hpp"
#include "kr/session.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool reveal_hidden = false;
  std::string host = "127.0.0.1";
  int port = 8080;
};

kr::ScenarioConfig resolve(const Options& o) {
  kr::ScenarioConfig c = kr::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  kr::validate(c);
  return c;
}

std::filesystem::path out_dir(const Options& o, const kr::ScenarioConfig& c) {
  if (!o.out.empty()) return o.out;
  if (c.output_dir) return *c.output_dir;
  return "out";
}

void report(const std::exception& e, const Options& o) {
  const kr::Json err = kr::error_json(e);
  std::cerr << "kr: " << err.dump() << "\n";
  if (o.out.empty()) return;
  try {
    std::filesystem::create_directories(o.out);
    kr::write_text(std::filesystem::path(o.out) / "error.json", err.dump(2) + "\n");
  } catch (...) {
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kr: simulate, verbalize and bet on roulette games"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", o.config, "scenario config (JSON)");
    if (config_required) opt->required();
    sub->add_option("--seed", o.seed, "override the config seed");
    sub->add_option("--out", o.out, "output directory");
  };
  auto* simulate = app.add_subcommand("simulate", "integrate a fixed horizon, write trajectory.csv");
  auto* verbalize = app.add_subcommand("verbalize", "simulate, recover ε and emit words");
  auto* resonance = app.add_subcommand("resonance", "play n_sets and test v/ω resonance");
  auto* bet = app.add_subcommand("bet", "play n_sets with the predictor betting");
  auto* run = app.add_subcommand("run", "full experiment with manifest");
  auto* serve = app.add_subcommand("serve", "HTTP session service");
  for (auto* sub : {simulate, verbalize, resonance, bet, run}) add_common(sub, true);
  add_common(serve, false);
  for (auto* sub : {simulate, verbalize, run})
    sub->add_flag("--reveal-hidden", o.reveal_hidden, "also export ground-truth ε (eps_truth.csv)");
  serve->add_option("--host", o.host, "bind address");
  serve->add_option("--port", o.port, "port (0 picks one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (serve->parsed()) {
      if (!o.config.empty()) resolve(o);
      kr::SessionService service;
      kr::HttpServer server(service);
      const int port = server.bind(o.host, o.port);
      std::cout << "listening on " << o.host << ":" << port << std::endl;
      server.listen();
      return 0;
    }
    const kr::ScenarioConfig c = resolve(o);
    const auto dir = out_dir(o, c);
    if (simulate->parsed()) kr::run_simulate(c, dir, o.reveal_hidden);
    if (verbalize->parsed()) kr::run_verbalize(c, dir, o.reveal_hidden);
    if (resonance->parsed()) kr::run_resonance(c, dir);
    if (bet->parsed()) kr::run_bet(c, dir);
    if (run->parsed()) {
      const auto result = kr::run_experiment(c, dir, o.reveal_hidden);
      std::cout << "run_hash " << result.manifest["run_hash"].get<std::string>() << "\n";
    }
    std::cout << "wrote " << dir.string() << "\n";
    return 0;
  } catch (const kr::ValidationError& e) {
    report(e, o);
    return 2;
  } catch (const std::exception& e) {
    report(e, o);
    return 3;
  }
}
