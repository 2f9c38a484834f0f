#include "kr/stages.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace kr;

namespace {

double max_abs(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

EngineConfig scalar_engine(const std::string& predicate, double max_duration) {
  EngineConfig e;
  e.game = test::scalar_game(0.5);
  e.policies = {test::constant(0.1)};
  e.omega_partition = CellPartition{{{0.0}}, 0.0};
  e.control_partition = CellPartition{{{0.0}}, 0.0};
  e.predicate = PredicateSpec{predicate, {}};
  e.max_duration = max_duration;
  return e;
}

}  // namespace

TEST_CASE("incremental fold matches recomputation on every scenario") {
  for (const auto& id : known_scenarios()) {
    CAPTURE(id);
    const auto config = test::scenario(id, 9, 60);
    PerceptionEngine engine(engine_config(config));
    const auto match = engine.run_match(60);
    const auto& traj = engine.trajectory();
    const auto eps = engine.recovered_tail(0);
    REQUIRE(static_cast<std::size_t>(eps.size()) == traj.size());

    std::vector<std::size_t> boundaries{match.sets.front().sample_begin};
    for (const auto& s : match.sets) boundaries.push_back(s.sample_end);
    const auto recomputed =
        emit_words(eps, traj, config.omega_partition, config.control_partition, boundaries);
    REQUIRE(recomputed.entries.size() == match.words.entries.size());
    for (std::size_t i = 0; i < recomputed.entries.size(); ++i) {
      const auto& a = match.words.entries[i];
      const auto& b = recomputed.entries[i];
      REQUIRE(max_abs(a.omega_value, b.omega_value) <= 1e-12);
      REQUIRE(max_abs(a.v_value, b.v_value) <= 1e-12);
      REQUIRE(a.omega_symbol == b.omega_symbol);
      REQUIRE(a.v_symbol == b.v_symbol);

      const auto& s = match.sets[i];
      double integral = 0.0;
      for (std::size_t k = s.sample_begin + 1; k <= s.sample_end; ++k)
        integral += 0.5 * (traj[k].t - traj[k - 1].t) * (traj[k].phi[0] + traj[k - 1].phi[0]);
      REQUIRE(std::abs(s.phi_summary - integral / (s.t_end - s.t_begin)) <= 1e-12);
    }
  }
}

TEST_CASE("sets chain without gaps") {
  const auto config = test::scenario("KR-1R", 3, 40);
  PerceptionEngine engine(engine_config(config));
  const auto match = engine.run_match(40);
  CHECK(engine.current_word().n == 40);
  CHECK(match.sets.front().sample_begin == 0);
  for (std::size_t k = 1; k < match.sets.size(); ++k) {
    const auto& prev = match.sets[k - 1];
    const auto& cur = match.sets[k];
    REQUIRE(cur.sample_begin == prev.sample_end);
    REQUIRE(cur.t_begin == prev.t_end);
    REQUIRE(same_vector(cur.start.phi, prev.end.phi));
    REQUIRE(same_vector(cur.start.xi, prev.end.xi));
    REQUIRE(cur.omega_at_start.n == match.words.entries[k - 1].n);
    REQUIRE(match.words.entries[k].n == static_cast<int>(k + 1));
  }
}

TEST_CASE("always and never predicates") {
  PerceptionEngine a(scalar_engine("always", 5.0));
  const auto one = a.run_set();
  CHECK(one.sample_end - one.sample_begin == 1);
  CHECK(one.finishing_reason == FinishingReason::predicate);

  PerceptionEngine n(scalar_engine("never", 0.37));
  const auto capped = n.run_set();
  CHECK(capped.sample_end - capped.sample_begin == 37);
  CHECK(capped.finishing_reason == FinishingReason::horizon);
  CHECK(to_string(capped.finishing_reason) == "horizon");

  CHECK_THROWS_AS(n.run_set(PredicateSpec{"never", {}}, 0.0), ValidationError);
  CHECK_THROWS_AS(n.run_set(PredicateSpec{"never", {}}, INFINITY), ValidationError);
  CHECK_THROWS_AS(make_predicate(PredicateSpec{"omega-cell", {}}), ValidationError);
}

TEST_CASE("norm-exceeds predicate") {
  auto e = scalar_engine("norm-exceeds", 50.0);
  e.predicate.params = {{"threshold", 0.2}};
  e.game.phi0 = Vector::Constant(1, 1.0);
  PerceptionEngine engine(e);
  // φ decays from 1 towards the input level; |φ| > 0.2 right away.
  const auto rec = engine.run_set();
  CHECK(rec.sample_end - rec.sample_begin == 1);
}

TEST_CASE("wheel-sector sets end in the next sector") {
  const auto config = test::scenario("custom", 2, 30);
  PerceptionEngine engine(engine_config(config));
  const auto match = engine.run_match(30);
  int by_predicate = 0;
  for (const auto& s : match.sets) {
    if (s.finishing_reason != FinishingReason::predicate) continue;
    ++by_predicate;
    double angle = std::atan2(s.end.phi[1], s.end.phi[0]);
    if (angle < 0) angle += 2 * std::numbers::pi;
    const int sector = std::min(3, static_cast<int>(angle / (std::numbers::pi / 2)));
    REQUIRE(sector == (s.omega_at_start.n + 1) % 4);
  }
  CHECK(by_predicate > 20);
}

TEST_CASE("hooks can swap policies between sets") {
  const auto config = test::scenario("KR-1", 4, 6);
  PerceptionEngine engine(engine_config(config));
  const auto match = engine.run_match(6, [](std::size_t k, PerceptionEngine& e) {
    if (k == 2) e.policies().replace(0, test::constant(0.75));
    if (k == 4) e.policies().replace(1, PolicySpec{"held", {}});
    if (k >= 4) e.policies().player(1).hold(Vector::Constant(2, -0.25 * static_cast<double>(k)));
  });
  const auto& traj = engine.trajectory();
  const auto& s2 = match.sets[2];
  for (std::size_t k = s2.sample_begin + 1; k <= s2.sample_end; ++k)
    REQUIRE(traj[k].u_pure[0].isApproxToConstant(0.75));
  for (std::size_t n : {4, 5})
    for (std::size_t k = match.sets[n].sample_begin + 1; k <= match.sets[n].sample_end; ++k)
      REQUIRE(traj[k].u_pure[1].isApproxToConstant(-0.25 * static_cast<double>(n)));
  CHECK_THROWS_AS(engine.policies().player(0).hold(Vector::Zero(2)), ValidationError);
}

TEST_CASE("errors carry the set index") {
  auto e = scalar_engine("never", 30.0);
  e.game.phi_params = {{"decay", -2000.0}};
  PerceptionEngine engine(e);
  try {
    engine.run_match(3);
    FAIL("expected divergence");
  } catch (const Error& err) {
    CHECK(err.code() == "integration_diverged");
    CHECK(std::string(err.what()).rfind("set 0: ", 0) == 0);
  }
}
