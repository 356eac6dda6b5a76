#include <cmath>

#include "doctest.h"
#include "game_fixtures.hpp"

using namespace ince;
using namespace ince::testing;

TEST_CASE("direct-path score is the zero reference") {
  RngStream rng(11);
  const GameInstance inst = random_instance(rng, 4, 3);
  const SlotGame game = inst.make_game();
  for (int m = 0; m < 4; ++m) CHECK(game.score(m, 0) == 0.0);
  CHECK(game.potential(StrategyProfile::all_direct(4)) == 0.0);
}

TEST_CASE("unilateral deviations move the potential by the deviator's gain") {
  RngStream rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const int m_count = rng.uniform_int(1, 4);
    const int k_count = rng.uniform_int(1, 3);
    GameInstance inst = random_instance(rng, m_count, k_count);
    SlotGame game = inst.make_game();
    game.freeze_splits(random_splits(rng, m_count, k_count));

    // random coupling-respecting profile
    StrategyProfile prof = StrategyProfile::all_direct(m_count);
    for (int m = 0; m < m_count; ++m) {
      if (game.in_game(m)) prof.channel[m] = rng.uniform_int(0, k_count);
    }
    for (int m = 0; m < m_count; ++m) {
      if (!game.in_game(m)) continue;
      for (int target = 0; target <= k_count; ++target) {
        StrategyProfile dev = prof;
        dev.channel[m] = target;
        const double du = game.utility(m, dev) - game.utility(m, prof);
        const double dphi = game.potential(dev) - game.potential(prof);
        CHECK(std::abs(du - dphi) <= 1e-9);
      }
    }
  }
}

TEST_CASE("single-user potential differs from the utility by a constant") {
  RngStream rng(31);
  GameInstance inst = random_instance(rng, 1, 3, {.generous_bounds = true});
  inst.active[0] = 1;
  inst.decision.collaborate[0] = 1;
  const SlotGame game = inst.make_game();
  StrategyProfile prof = StrategyProfile::all_direct(1);
  const double offset = game.potential(prof) - game.utility(0, prof);
  for (int k = 1; k <= 3; ++k) {
    prof.channel[0] = k;
    CHECK(game.potential(prof) - game.utility(0, prof) ==
          doctest::Approx(offset).epsilon(1e-12));
  }
}

TEST_CASE("a starved node pulls the refined fraction to zero") {
  RngStream rng(41);
  GameInstance inst = random_instance(rng, 1, 1, {.generous_bounds = true});
  inst.active[0] = 1;
  inst.decision.collaborate[0] = 1;
  inst.cfg.inc_rates_hz[0] = 1e3;  // effectively useless node
  inst.cn_loads[0] = 0.0;
  const SlotGame game = inst.make_game();
  const SplitResult& sr = game.split_result(0, 1);
  CHECK(sr.split.inc_fraction <= 0.02);
}

TEST_CASE("refinement never falls below the starting split") {
  RngStream rng(51);
  for (int trial = 0; trial < 30; ++trial) {
    GameInstance inst =
        random_instance(rng, 1, 2, {.generous_bounds = true,
                                    .fast_nodes = trial % 2 == 0});
    inst.active[0] = 1;
    inst.decision.collaborate[0] = 1;
    const SlotGame game = inst.make_game();
    const SplitChoice init{rng.uniform(), rng.uniform(0.1, 1.0)};
    const SplitResult res = game.refine_split(0, 1, init);
    SlotGame frozen = inst.make_game();
    frozen.freeze_splits({{init, init}});
    if (frozen.split_result(0, 1).feasible) {
      CHECK(res.score >= frozen.split_result(0, 1).score - 1e-9);
    }
  }
}

TEST_CASE("coarse grid search agrees with the refined split") {
  RngStream rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    GameInstance inst =
        random_instance(rng, 1, 1, {.generous_bounds = true,
                                    .fast_nodes = true});
    inst.active[0] = 1;
    inst.decision.collaborate[0] = 1;
    SlotGame game = inst.make_game();
    const SplitResult res = game.split_result(0, 1);

    double best = -1e18;
    SlotGame probe = inst.make_game();
    for (int i = 0; i <= 100; ++i) {
      for (int j = 1; j <= 100; ++j) {
        const SplitChoice s{i / 100.0, j / 100.0};
        probe.freeze_splits({{s}});
        const SplitResult& cell = probe.split_result(0, 1);
        if (cell.feasible) best = std::max(best, cell.score);
      }
    }
    if (best > -1e17) {
      CHECK(res.feasible);
      CHECK(res.score >= best - 1e-3);
    }
  }
}

TEST_CASE("feasible channel sets") {
  RngStream rng(71);
  GameInstance inst = random_instance(rng, 6, 2, {.generous_bounds = true});
  for (int m = 0; m < 6; ++m) inst.active[m] = 1;
  inst.decision.collaborate.assign(6, 1);
  inst.decision.collaborate[0] = 0;
  inst.cfg.inc_assoc_capacity = 5;
  const SlotGame game = inst.make_game();
  const StrategyProfile direct = StrategyProfile::all_direct(6);

  SUBCASE("opted-out users have no collaborative channels") {
    CHECK(game.feasible_channels(0, direct).empty());
    CHECK(game.best_response(0, direct) == 0);
  }
  SUBCASE("ample capacity keeps channels open") {
    const auto channels = game.feasible_channels(1, direct);
    CHECK(!channels.empty());
  }
  SUBCASE("a full node is excluded") {
    StrategyProfile crowded = direct;
    for (int m = 1; m <= 5; ++m) crowded.channel[m] = 1;  // node at capacity 5
    const auto channels = game.feasible_channels(0, crowded);
    CHECK(channels.empty());  // user 0 is opted out anyway
    GameInstance inst2 = inst;
    inst2.decision.collaborate[0] = 1;
    const SlotGame game2 = inst2.make_game();
    for (int k : game2.feasible_channels(0, crowded)) CHECK(k != 1);
  }
}

TEST_CASE("best response matches exhaustive candidate comparison") {
  RngStream rng(81);
  for (int trial = 0; trial < 50; ++trial) {
    GameInstance inst = random_instance(
        rng, 2, 2, {.generous_bounds = true, .fast_nodes = trial % 2 == 1});
    const SlotGame game = inst.make_game();
    StrategyProfile prof = StrategyProfile::all_direct(2);
    for (int m = 0; m < 2; ++m) {
      if (game.in_game(m)) prof.channel[m] = rng.uniform_int(0, 2);
    }
    for (int m = 0; m < 2; ++m) {
      if (!game.in_game(m)) continue;
      int best = 0;
      double best_score = 0.0;
      for (int k : game.feasible_channels(m, prof)) {
        if (game.score(m, k) > best_score) {
          best = k;
          best_score = game.score(m, k);
        }
      }
      CHECK(game.best_response(m, prof) == best);
    }
  }
}

TEST_CASE("dynamics converge and verify as equilibria") {
  RngStream rng(91);
  SUBCASE("one user settles immediately") {
    GameInstance inst = random_instance(rng, 1, 2, {.generous_bounds = true});
    inst.active[0] = 1;
    inst.decision.collaborate[0] = 1;
    const SlotGame game = inst.make_game();
    const DynamicsResult dyn = game.run_dynamics(16);
    CHECK(dyn.converged);
    CHECK(dyn.equilibrium);
    CHECK(dyn.moves <= 1);
    CHECK(dyn.rounds <= 2);
  }
  SUBCASE("two symmetric users split across two equal unit-capacity nodes") {
    GameInstance inst = random_instance(rng, 2, 2, {.generous_bounds = true});
    inst.active = {1, 1};
    inst.decision.collaborate = {1, 1};
    inst.cfg.inc_assoc_capacity = 1;
    inst.cfg.inc_rates_hz = {60e9, 60e9};  // beats the server: joining pays
    inst.cn_loads = {0.0, 0.0};
    for (int m = 0; m < 2; ++m) {
      inst.tasks[m].cycles = 2e9;
      inst.tasks[m].input_bits = 1e6;
      inst.tasks[m].latency_bound_s = 2.0;
    }
    const SlotGame game = inst.make_game();
    REQUIRE(game.score(0, 1) > 0.0);
    const DynamicsResult dyn = game.run_dynamics(16);
    CHECK(dyn.converged);
    CHECK(dyn.equilibrium);
    CHECK(dyn.profile.channel[0] > 0);
    CHECK(dyn.profile.channel[1] > 0);
    CHECK(dyn.profile.channel[0] != dyn.profile.channel[1]);
  }
  SUBCASE("random instances pass the deviation sweep") {
    for (int trial = 0; trial < 40; ++trial) {
      GameInstance inst = random_instance(
          rng, 4, 3, {.generous_bounds = trial % 2 == 0,
                      .fast_nodes = trial % 3 == 0});
      const SlotGame game = inst.make_game();
      const DynamicsResult dyn = game.run_dynamics(64);
      CHECK(dyn.converged);
      CHECK(dyn.equilibrium);
      for (int m = 0; m < 4; ++m) {
        if (!inst.decision.collaborate[m] || !inst.active[m]) {
          CHECK(dyn.profile.channel[m] == 0);  // coupling constraint
        }
      }
    }
  }
}

TEST_CASE("improving steps raise the potential") {
  RngStream rng(101);
  GameInstance inst = random_instance(rng, 4, 3, {.generous_bounds = true,
                                                  .fast_nodes = true});
  const SlotGame game = inst.make_game();
  StrategyProfile prof = StrategyProfile::all_direct(4);
  double phi = game.potential(prof);
  for (int pass = 0; pass < 8; ++pass) {
    bool changed = false;
    for (int m = 0; m < 4; ++m) {
      if (!game.in_game(m)) continue;
      const int reply = game.best_response(m, prof);
      if (reply != prof.channel[m]) {
        const double before = game.utility(m, prof);
        prof.channel[m] = reply;
        const double next_phi = game.potential(prof);
        CHECK(game.utility(m, prof) >= before);
        CHECK(next_phi >= phi);
        phi = next_phi;
        changed = true;
      }
    }
    if (!changed) break;
  }
}

TEST_CASE("interference tolerance grows with the latency budget") {
  RngStream rng(111);
  GameInstance inst = random_instance(rng, 1, 1, {.generous_bounds = true});
  inst.active[0] = 1;
  inst.decision.collaborate[0] = 1;
  inst.tasks[0].latency_bound_s = 0.5;
  const SlotGame tight = inst.make_game();
  GameInstance wide = inst;
  wide.tasks[0].latency_bound_s = 1.5;
  const SlotGame loose = wide.make_game();
  const InterferenceTolerance a = tight.interference_tolerance(0, 1);
  const InterferenceTolerance b = loose.interference_tolerance(0, 1);
  if (a.attainable && b.attainable) {
    CHECK(b.budget_s > a.budget_s);
    CHECK(b.tolerance_w >= a.tolerance_w);
  }
}
