#include "doctest.h"
#include "ince/compute.hpp"
#include "ince/config.hpp"
#include "ince/rng.hpp"

using namespace ince;

TEST_CASE("twin-adjusted edge execution latency") {
  SUBCASE("zero discrepancy recovers the ideal latency") {
    DtEstimate dt{30e9, 0.0};
    CHECK(mec_exec_latency(1.0, 1.5e9, dt) == doctest::Approx(1.5e9 / 30e9));
  }
  SUBCASE("estimate plus gap equals the closed form") {
    DtEstimate dt = DtEstimate::from_fraction(30e9, 0.3);
    const double estimated = 1.5e9 / 30e9;
    const double gap = 1.5e9 * dt.discrepancy_hz /
                       (dt.rate_hz * (dt.rate_hz - dt.discrepancy_hz));
    CHECK(estimated == doctest::Approx(0.05));
    CHECK(mec_exec_latency(1.0, 1.5e9, dt) ==
          doctest::Approx(estimated + gap).epsilon(1e-14));
    CHECK(mec_exec_latency(1.0, 1.5e9, dt) ==
          doctest::Approx(1.5e9 / (0.7 * 30e9)).epsilon(1e-14));
  }
  SUBCASE("closed form on random inputs") {
    RngStream rng(31);
    for (int i = 0; i < 10000; ++i) {
      const double frac = rng.uniform();
      const double cycles = rng.uniform(1e5, 5e9);
      const double rate = rng.uniform(1e9, 50e9);
      const double disc = rng.uniform(0.0, 0.95);
      DtEstimate dt = DtEstimate::from_fraction(rate, disc);
      const double got = mec_exec_latency(frac, cycles, dt);
      const double expect = frac * cycles / (rate - disc * rate);
      CHECK(got == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  SUBCASE("edge cases") {
    DtEstimate dt{30e9, 0.0};
    CHECK(mec_exec_latency(0.0, 1e9, dt) == 0.0);
    CHECK_THROWS_AS(mec_exec_latency(1.0, 1e9, DtEstimate{1e9, 1e9}),
                    ComputeError);
  }
}

TEST_CASE("node execution with a compute share") {
  DtEstimate dt = DtEstimate::from_fraction(5e9, 0.3);
  CHECK(cn_exec_latency(0.0, 1e9, dt, 1.0) == 0.0);
  CHECK(cn_exec_latency(0.4, 1e9, dt, 1.0) ==
        doctest::Approx(0.4e9 / 3.5e9).epsilon(1e-12));
  CHECK(cn_exec_latency(0.4, 1e9, dt, 0.5) ==
        doctest::Approx(2.0 * 0.4e9 / 3.5e9).epsilon(1e-12));
  CHECK_THROWS_AS(cn_exec_latency(0.4, 1e9, dt, 0.0), ComputeError);
}

TEST_CASE("queueing and forwarding") {
  CHECK(queue_delay(0.0, 30e9) == 0.0);
  CHECK(queue_delay(2e9, 30e9) == doctest::Approx(0.066666666667));
  CHECK(forwarding_delay(0.0, 1e-3, 1e9) == doctest::Approx(1e-3));
  CHECK(forwarding_delay(5e8, 1e-3, 1e9) == doctest::Approx(0.501));
}

TEST_CASE("breakdown totals re-sum") {
  RngStream rng(17);
  for (int i = 0; i < 200; ++i) {
    LatencyBreakdown b;
    b.ul_tx = rng.uniform(0, 0.1);
    b.cn_exec = rng.uniform(0, 0.1);
    b.cn_queue = rng.uniform(0, 0.1);
    b.forward = rng.uniform(0, 0.1);
    b.mec_exec = rng.uniform(0, 0.1);
    b.mec_queue = rng.uniform(0, 0.1);
    b.dl_tx = rng.uniform(0, 0.1);
    b.collaborative = rng.uniform() < 0.5;
    finalize_total(b);
    double expect = b.ul_tx + b.mec_exec + b.mec_queue + b.dl_tx;
    if (b.collaborative) expect += b.cn_exec + b.cn_queue + b.forward;
    CHECK(b.total == doctest::Approx(expect).epsilon(1e-15));
    // monotone in a queue bump
    LatencyBreakdown larger = b;
    larger.mec_queue += 0.05;
    finalize_total(larger);
    CHECK(larger.total > b.total);
  }
}

TEST_CASE("direct path collapses the breakdown") {
  LatencyBreakdown b;
  b.ul_tx = 0.01;
  b.mec_exec = 0.02;
  b.dl_tx = 0.03;
  b.cn_exec = 99.0;  // ignored off the collaborative path
  b.collaborative = false;
  finalize_total(b);
  CHECK(b.total == doctest::Approx(0.06));
}

TEST_CASE("user utility") {
  ScenarioConfig cfg = parse_config("");
  SUBCASE("direct mode pays only the energy term") {
    const double u = user_utility(0.08, 0.08, 0.02, cfg);
    CHECK(u == doctest::Approx(-cfg.utility_energy_weight * 0.02));
  }
  SUBCASE("worked example") {
    cfg.utility_latency_weight = 1.0;
    cfg.utility_energy_weight = 0.5;
    CHECK(user_utility(0.10, 0.06, 0.02, cfg) == doctest::Approx(0.03));
  }
  SUBCASE("latency weight scales only the bracket") {
    cfg.utility_latency_weight = 2.0;
    cfg.utility_energy_weight = 0.5;
    CHECK(user_utility(0.10, 0.06, 0.02, cfg) ==
          doctest::Approx(2.0 * 0.04 - 0.01));
  }
}

TEST_CASE("network cost and performance gain") {
  {
    const double t[2] = {0.1, 0.2};
    const double e[2] = {1.0, 2.0};
    CHECK(operator_cost(t, e) == doctest::Approx(3.3));
  }
  {
    const double none[0] = {};
    CHECK(operator_cost(std::span<const double>(none, 0),
                        std::span<const double>(none, 0)) == 0.0);
  }
  CHECK(performance_gain(2.0, 2.0) == doctest::Approx(1.0));
  CHECK(performance_gain(3.0, 1.5) == doctest::Approx(2.0));
  CHECK_THROWS_AS(performance_gain(1.0, 0.0), ComputeError);
}

TEST_CASE("cost gain is 1 against itself and antitone in own cost") {
  const ScenarioConfig cfg = parse_config("");
  CHECK(cost_gain(0.5, 2.0, 0.5, 2.0, cfg) == doctest::Approx(1.0));
  const double better = cost_gain(0.5, 2.0, 0.25, 1.0, cfg);
  const double worse = cost_gain(0.5, 2.0, 1.0, 4.0, cfg);
  CHECK(better > 1.0);
  CHECK(worse < 1.0);
  CHECK(cost_gain(0.5, 2.0, 0.5, 4.0, cfg) <
        cost_gain(0.5, 2.0, 0.5, 2.0, cfg));
}
