#include <cmath>
#include <vector>

#include "doctest.h"
#include "ince/requests.hpp"

using namespace ince;

namespace {

// stationary distribution by power iteration, independent of the chain code
std::vector<double> stationary_oracle(
    const std::vector<std::vector<double>>& t) {
  const int n = static_cast<int>(t.size());
  std::vector<double> p(n, 1.0 / n), next(n, 0.0);
  for (int it = 0; it < 20000; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) next[j] += p[i] * t[i][j];
    }
    p.swap(next);
  }
  return p;
}

}  // namespace

TEST_CASE("transition matrix rows are stochastic") {
  RequestParams params{0.1, 0.7, 3, 30};
  const auto t = transition_matrix(params);
  REQUIRE(t.size() == 31);
  for (const auto& row : t) {
    double sum = 0.0;
    for (double v : row) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("transition matrix entries") {
  RequestParams params{0.1, 0.7, 3, 30};
  const auto t = transition_matrix(params);
  for (int f = 1; f <= 30; ++f) CHECK(t[f][0] == doctest::Approx(0.1));
  // away from the wrap, each neighbor carries (1-R)/N
  CHECK(t[5][6] == doctest::Approx(0.9 / 3.0));
  CHECK(t[5][7] == doctest::Approx(0.9 / 3.0));
  CHECK(t[5][8] == doctest::Approx(0.9 / 3.0));
  CHECK(t[5][9] == 0.0);
  // idle row: Zipf over tasks plus the idle self-loop
  CHECK(t[0][0] == doctest::Approx(0.1));
  double znorm = 0.0;
  for (int f = 1; f <= 30; ++f) znorm += std::pow(f, -0.7);
  CHECK(t[0][3] == doctest::Approx(0.9 * std::pow(3.0, -0.7) / znorm));
  // the wrap onto idle is redistributed over the surviving neighbors
  CHECK(t[30][0] == doctest::Approx(0.1));
  CHECK(t[30][1] == doctest::Approx(0.9 / 2.0));
  CHECK(t[30][2] == doctest::Approx(0.9 / 2.0));
}

TEST_CASE("deterministic rows keep the state") {
  std::vector<std::vector<double>> identity(3, std::vector<double>(3, 0.0));
  for (int i = 0; i < 3; ++i) identity[i][i] = 1.0;
  RngStream rng(1);
  RequestState s{2, 1, 0};
  CHECK(step_requests(s, identity, rng) == s);
}

TEST_CASE("steps are seed-reproducible") {
  RequestParams params{0.1, 0.7, 3, 10};
  const auto t = transition_matrix(params);
  RngStream a(44), b(44);
  RequestState sa(4, 0), sb(4, 0);
  for (int i = 0; i < 200; ++i) {
    sa = step_requests(sa, t, a);
    sb = step_requests(sb, t, b);
    CHECK(sa == sb);
  }
}

TEST_CASE("empirical idle-exit frequencies match the Zipf row") {
  RequestParams params{0.1, 0.7, 3, 10};
  const auto t = transition_matrix(params);
  RngStream rng(7);
  std::vector<int> counts(11, 0);
  const int n = 200000;
  RequestState idle{0};
  for (int i = 0; i < n; ++i) counts[step_requests(idle, t, rng)[0]]++;
  for (int f = 0; f <= 10; ++f) {
    CHECK(std::abs(static_cast<double>(counts[f]) / n - t[0][f]) < 0.01);
  }
}

TEST_CASE("long-run idle mass matches the power-iteration oracle") {
  RequestParams params{0.2, 0.7, 3, 8};
  const auto t = transition_matrix(params);
  const auto pi = stationary_oracle(t);
  RngStream rng(13);
  RequestState s{0};
  long idle = 0;
  const int steps = 300000;
  for (int i = 0; i < steps; ++i) {
    s = step_requests(s, t, rng);
    if (s[0] == 0) idle++;
  }
  CHECK(std::abs(static_cast<double>(idle) / steps - pi[0]) < 0.01);
}

TEST_CASE("task sampling") {
  ScenarioConfig cfg = parse_config("");
  RngStream rng(3);
  SUBCASE("default ranges") {
    for (int i = 0; i < 200; ++i) {
      const TaskSpec t = sample_task(2, cfg, rng);
      CHECK(t.input_bits >= 1e6);
      CHECK(t.input_bits <= 5e6);
      CHECK(t.latency_bound_s >= 5e-3);
      CHECK(t.latency_bound_s <= 15e-3);
      CHECK(t.render_slope >= 1.0);
      CHECK(t.render_slope <= 10.0);
    }
  }
  SUBCASE("compute-intensive preset") {
    ScenarioConfig heavy =
        parse_config(R"({"task": {"class": "compute-intensive"}})");
    for (int i = 0; i < 200; ++i) {
      const TaskSpec t = sample_task(1, heavy, rng);
      CHECK(t.cycles >= 1e9);
      CHECK(t.cycles <= 2e9);
    }
  }
  SUBCASE("degenerate range is constant") {
    ScenarioConfig fixed = parse_config(
        R"({"task": {"size_bits": [2e6, 2e6], "cycles": [3e6, 3e6]}})");
    const TaskSpec t = sample_task(4, fixed, rng);
    CHECK(t.input_bits == 2e6);
    CHECK(t.cycles == 3e6);
  }
  SUBCASE("idle users cannot sample tasks") {
    CHECK_THROWS_AS(sample_task(0, cfg, rng), std::invalid_argument);
  }
}
