// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any failure.

#include "kr/harness.hpp"
#include "kr/integrator.hpp"
#include "kr/oracle.hpp"
#include "kr/stats.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>

using namespace kr;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("threw: ") + e.what()};
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = elapsed < budget_s;
  const bool pass = out.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s criterion %2d  %-28s %s; %.2fs (budget %.0fs)%s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              out.detail.c_str(), elapsed, budget_s, in_time ? "" : " OVER BUDGET");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... xs) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, xs...);
  return buf;
}

double rk4_decay_error(double dt) {
  const auto rhs = [](double, const Vector& y) -> Vector { return -y; };
  Vector y = Vector::Constant(1, 1.0);
  const long steps = std::lround(1.0 / dt);
  for (long k = 0; k < steps; ++k) y = rk4_step<double>(rhs, static_cast<double>(k) * dt, y, dt);
  return std::abs(y[0] - std::exp(-1.0));
}

std::vector<double> phi_summaries(const std::vector<SetRecord>& sets) {
  std::vector<double> out;
  for (const auto& s : sets) out.push_back(s.phi_summary);
  return out;
}

ResonanceReport resonance_of(const ScenarioConfig& c, const MatchResult& m) {
  return detect_resonance(m.words.v_symbols(), m.words.omega_symbols(), phi_summaries(m.sets), c.resonance,
                          stream_seed(c.seed, "resonance"));
}

}  // namespace

int main() {
  criterion(1, "integrator order", 1.0, [] {
    const double e1 = rk4_decay_error(0.01), e2 = rk4_decay_error(0.005);
    return Outcome{e1 < 1e-8 && e1 / e2 >= 12.0, fmt("error %.3g, halving ratio %.2f", e1, e1 / e2)};
  });

  criterion(2, "delay augmentation", 1.0, [] {
    const double dt = 0.01;
    double worst = 0.0;
    for (int steps : {1, 10, 50, 100}) {
      const auto aug = augment_history_feedback(test::scalar_game(), DelayFeedbackSpec{0, steps * dt, -0.8, dt}, steps);
      const auto traj = simulate(aug, 10.0, dt, {test::constant(0.5)}, 1);
      const auto oracle = test::ring_buffer_oracle(1.0, 0.5, -0.8, steps, dt, 1000);
      if (traj.size() != oracle.size()) return Outcome{false, "length mismatch"};
      for (std::size_t k = 0; k < traj.size(); ++k) worst = std::max(worst, std::abs(traj[k].phi[0] - oracle[k]));
    }
    return Outcome{worst <= 1e-6, fmt("sup-norm %.3g over horizon 10", worst)};
  });

  criterion(3, "epsilon round trip", 5.0, [] {
    auto c = test::scenario("KR-1", 7, 200);
    double err[2];
    int i = 0;
    for (auto form : {CouplingSpec::Form::additive, CouplingSpec::Form::affine_gain}) {
      c.coupling.form = form;
      const GameDefinition g = build_game(c);
      const auto traj = simulate(g, c.horizon, c.dt, c.policies, c.seed, c.set_length);
      err[i++] = (recover_epsilon(traj, g).values - ground_truth_trace(traj, oracle_access()).values)
                     .cwiseAbs()
                     .maxCoeff();
    }
    return Outcome{err[0] <= 1e-9 && err[1] <= 1e-6, fmt("additive %.3g, affine-gain %.3g", err[0], err[1])};
  });

  criterion(4, "transition detection", 10.0, [] {
    CellPartition p{{{-0.5, 0.0, 0.5}, {0.0}}, 0.0};
    int mismatches = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      p.hysteresis = seed % 2 ? 0.0 : 0.05;
      const auto tr = test::random_walk(seed, 5000, 2, 0.08);
      std::vector<std::size_t> found;
      for (const auto& t : detect_transitions(tr, p)) found.push_back(t.sample);
      mismatches += found == test::brute_force_transitions(tr, p) ? 0 : 1;
    }
    return Outcome{mismatches == 0, fmt("%d of 50 traces differ", mismatches)};
  });

  criterion(5, "incremental fold", 30.0, [] {
    double worst = 0.0;
    for (const auto& id : known_scenarios()) {
      const auto c = test::scenario(id, 7, 200);
      PerceptionEngine engine(engine_config(c));
      const auto m = engine.run_match(static_cast<std::size_t>(c.n_sets));
      std::vector<std::size_t> b{m.sets.front().sample_begin};
      for (const auto& s : m.sets) b.push_back(s.sample_end);
      const auto re = emit_words(engine.recovered_tail(0), engine.trajectory(), c.omega_partition,
                                 c.control_partition, b);
      for (std::size_t i = 0; i < re.entries.size(); ++i) {
        worst = std::max(worst, (re.entries[i].omega_value - m.words.entries[i].omega_value).cwiseAbs().maxCoeff());
        worst = std::max(worst, (re.entries[i].v_value - m.words.entries[i].v_value).cwiseAbs().maxCoeff());
      }
    }
    return Outcome{worst <= 1e-12, fmt("max deviation %.3g over %zu scenarios", worst, known_scenarios().size())};
  });

  criterion(6, "KR-1 quasirandomness", 30.0, [] {
    const auto c = test::scenario("KR-1", 7, 2000);
    PerceptionEngine engine(engine_config(c));
    const auto m = engine.run_match(2000);
    const auto r = quasirandomness_suite(m.words.omega_symbols(), c.alphabet_size, c.quasirandom);
    const double v = *std::max_element(r.serial_correlation.begin(), r.serial_correlation.end());
    const double h1 = r.entropy_rate[0];
    return Outcome{v < 0.2 && r.chi_square_p > 0.01 && h1 >= 1.8,
                   fmt("max V %.3f, chi-square p %.3f, H1 %.3f bits", v, r.chi_square_p, h1)};
  });

  // Criteria 7-9 share the KR-1R and KR-1 runs (seed 7, 500 sets).
  ScenarioConfig r_config = test::scenario("KR-1R", 7, 500);
  ScenarioConfig n_config = test::scenario("KR-1", 7, 500);
  RouletteRun r_run, n_run;
  ResonanceReport r_res;

  criterion(7, "resonance controls", 120.0, [&] {
    PerceptionEngine re(engine_config(r_config));
    r_run = play_roulette(re, r_config);
    PerceptionEngine ne(engine_config(n_config));
    n_run = play_roulette(ne, n_config);
    r_res = resonance_of(r_config, r_run.match);
    const auto n_res = resonance_of(n_config, n_run.match);

    int false_positives = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      Rng rng(seed, "acceptance/independent-pair");
      std::vector<int> v(500), w(500);
      for (auto& s : v) s = static_cast<int>(rng.below(4));
      for (auto& s : w) s = static_cast<int>(rng.below(4));
      false_positives += detect_resonance(v, w, {}, r_config.resonance, seed).detected ? 1 : 0;
    }
    const bool ok = r_res.detected && r_res.p_value < 0.01 && r_res.phi_bins_all_above && !n_res.detected &&
                    false_positives >= 2 && false_positives <= 8;
    return Outcome{ok, fmt("KR-1R p %.4f bins above %s; KR-1 p %.3f detected %s; false positives %d/100",
                           r_res.p_value, r_res.phi_bins_all_above ? "yes" : "no", n_res.p_value,
                           n_res.detected ? "yes" : "no", false_positives)};
  });

  criterion(8, "serial test with resonance", 5.0, [&] {
    const auto v = r_run.match.words.v_symbols();
    const double lag1 = cramers_v(std::vector<int>(v.begin(), v.end() - 1), std::vector<int>(v.begin() + 1, v.end()));
    const bool ok = lag1 < r_config.quasirandom.max_cramers_v && r_res.detected;
    return Outcome{ok, fmt("v lag-1 V %.3f, resonance detected %s", lag1, r_res.detected ? "yes" : "no")};
  });

  criterion(9, "predictor betting", 60.0, [&] {
    const auto& rl = r_run.ledger;
    const auto& nl = n_run.ledger;
    const auto rn = static_cast<std::int64_t>(rl.entries.size());
    const auto nn = static_cast<std::int64_t>(nl.entries.size());
    const double p_r = binomial_sf(static_cast<std::int64_t>(rl.hits()), rn, 0.25);
    const double p_n = binomial_two_sided(static_cast<std::int64_t>(nl.hits()), nn, 0.25);
    const bool ok = rn >= 490 && p_r < 0.01 && p_n > 0.05;
    return Outcome{ok, fmt("KR-1R %zu/%lld hits (p %.3g); KR-1 %zu/%lld hits (two-sided p %.3f)", rl.hits(),
                           static_cast<long long>(rn), p_r, nl.hits(), static_cast<long long>(nn), p_n)};
  });

  criterion(10, "manifest reproducibility", 60.0, [] {
    const auto dir = std::filesystem::temp_directory_path() / "kr_acceptance";
    std::filesystem::remove_all(dir);
    const auto c = test::scenario("KR-1R", 7, 200);
    const auto a = run_experiment(c, dir / "a");
    const auto b = run_experiment(c, dir / "b");
    std::filesystem::remove_all(dir);
    const bool ok = a.manifest["files"] == b.manifest["files"] && a.manifest["run_hash"] == b.manifest["run_hash"];
    return Outcome{ok, "run_hash " + a.manifest["run_hash"].get<std::string>().substr(0, 16)};
  });

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
