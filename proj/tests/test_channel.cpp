#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "ince/channel.hpp"

using namespace ince;

namespace {

// independent tail-function inversion: long-double bisection on erfc
double inverse_q_oracle(double eps) {
  long double lo = -45.0L, hi = 45.0L;
  for (int i = 0; i < 300; ++i) {
    const long double mid = 0.5L * (lo + hi);
    const long double q = 0.5L * erfcl(mid / sqrtl(2.0L));
    if (q > eps) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return static_cast<double>(0.5L * (lo + hi));
}

ChannelRealization manual_realization(int users, int antennas, double gain,
                                      std::complex<double> entry) {
  ChannelRealization ch;
  ch.positions.assign(users, {0.0, 0.0});
  ch.gain.assign(users, gain);
  ch.fading_ul.assign(
      users, std::vector<std::complex<double>>(antennas, entry));
  ch.fading_dl = ch.fading_ul;
  return ch;
}

}  // namespace

TEST_CASE("path loss formula") {
  CHECK(path_loss_db(1.0) == doctest::Approx(-35.3));
  CHECK(path_loss_db(100.0) == doctest::Approx(-110.5));
  // high-precision oracle for a non-decade distance
  const long double oracle = -35.3L - 37.6L * log10l(50.0L);
  CHECK(path_loss_db(50.0) ==
        doctest::Approx(static_cast<double>(oracle)).epsilon(1e-12));
  CHECK_THROWS_AS(path_loss_db(0.0), ChannelError);
  CHECK_THROWS_AS(path_loss_db(-3.0), ChannelError);
}

TEST_CASE("equal distances give equal gains") {
  const double g = std::pow(10.0, path_loss_db(100.0) / 10.0);
  CHECK(g == doctest::Approx(std::pow(10.0, -11.05)));
}

TEST_CASE("realizations are seed-deterministic") {
  ScenarioConfig cfg = parse_config("");
  RngStream a(99), b(99);
  const ChannelRealization ra = draw_realization(cfg, a);
  const ChannelRealization rb = draw_realization(cfg, b);
  for (int m = 0; m < cfg.num_users; ++m) {
    CHECK(ra.gain[m] == rb.gain[m]);
    for (int l = 0; l < cfg.num_antennas; ++l) {
      CHECK(ra.fading_ul[m][l] == rb.fading_ul[m][l]);
    }
  }
}

TEST_CASE("fading entries have unit second moment") {
  ScenarioConfig cfg = parse_config(
      R"({"num_users": 10, "num_antennas": 10, "ofmo_capacity": 5})");
  RngStream rng(2024);
  double acc = 0.0;
  long count = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    const ChannelRealization ch = draw_realization(cfg, rng);
    for (const auto& col : ch.fading_ul) {
      for (const auto& h : col) {
        acc += std::norm(h);
        ++count;
      }
    }
  }
  CHECK(count == 1000000);
  CHECK(acc / count == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("uplink SINR") {
  SUBCASE("single user sees no interference") {
    // |h|^2 = 4 via two antennas of sqrt(2)
    ChannelRealization ch =
        manual_realization(1, 2, 1.0, {std::numbers::sqrt2, 0.0});
    const int assign[1] = {1};
    const double power[1] = {0.2};
    CHECK(uplink_sinr(0, assign, power, ch, 1e-13) ==
          doctest::Approx(8e12).epsilon(1e-12));
  }
  SUBCASE("distinct channels do not interfere") {
    ChannelRealization ch = manual_realization(2, 2, 1.0, {1.0, 0.0});
    const int split[2] = {1, 2};
    const int shared[2] = {1, 1};
    const double power[2] = {0.2, 0.2};
    const double solo = uplink_sinr(0, split, power, ch, 1e-13);
    const double contested = uplink_sinr(0, shared, power, ch, 1e-13);
    CHECK(solo > contested);
    CHECK(solo == doctest::Approx(0.2 * 2.0 / 1e-13));
  }
  SUBCASE("identical vectors on one channel: match-filter residual") {
    ChannelRealization ch = manual_realization(2, 2, 1.0, {1.0, 1.0});
    const int assign[2] = {1, 1};
    const double power[2] = {0.2, 0.2};
    // |h^H h|^2 / |h|^2 = |h|^2 for identical vectors
    double hsq = 0.0;
    std::complex<double> dot{0.0, 0.0};
    for (const auto& h : ch.fading_ul[0]) hsq += std::norm(h);
    for (size_t l = 0; l < ch.fading_ul[0].size(); ++l) {
      dot += std::conj(ch.fading_ul[0][l]) * ch.fading_ul[1][l];
    }
    const double interference = 0.2 * std::norm(dot) / hsq;
    const double n0 = 1e-13;
    const double expected = 0.2 * hsq / (interference + n0);
    CHECK(uplink_sinr(0, assign, power, ch, n0) ==
          doctest::Approx(expected).epsilon(1e-12));
    CHECK(interference == doctest::Approx(0.2 * hsq));
  }
  SUBCASE("errors") {
    ChannelRealization ch = manual_realization(1, 2, 1.0, {1.0, 0.0});
    const int none[1] = {-1};
    const double power[1] = {0.2};
    CHECK_THROWS_AS(uplink_sinr(0, none, power, ch, 1e-13), ChannelError);
  }
  SUBCASE("power/noise ratio homogeneity") {
    ChannelRealization ch = manual_realization(3, 2, 1.0, {0.7, -0.4});
    ch.fading_ul[1][0] = {0.1, 0.9};
    ch.fading_ul[2][1] = {-0.3, 0.2};
    const int assign[3] = {1, 1, 1};
    const double p1[3] = {0.2, 0.3, 0.4};
    const double p2[3] = {2.0, 3.0, 4.0};
    const double g1 = uplink_sinr(0, assign, p1, ch, 1e-13);
    const double g2 = uplink_sinr(0, assign, p2, ch, 1e-12);
    CHECK(g1 == doctest::Approx(g2).epsilon(1e-12));
  }
}

TEST_CASE("inverse Q matches a bisection oracle") {
  for (double eps : {1e-9, 1e-6, 1e-3, 0.1, 0.5, 0.9}) {
    CHECK(inverse_q(eps) ==
          doctest::Approx(inverse_q_oracle(eps)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(inverse_q(0.0), std::domain_error);
  CHECK_THROWS_AS(inverse_q(1.0), std::domain_error);
}

TEST_CASE("finite-blocklength rate") {
  SUBCASE("zero SINR gives zero rate") {
    CHECK(urllc_rate(0.0, 10e6, 256, 1e-9) == 0.0);
  }
  SUBCASE("reference point near 3.46e7 bit/s") {
    const double rate = urllc_rate(15.0, 10e6, 256, 1e-9);
    // oracle evaluation of the same closed form
    const double shannon = 10e6 * std::log2(16.0);
    const double v = 1.0 - 1.0 / (16.0 * 16.0);
    const double penalty = 10e6 * std::sqrt(v / 256.0) *
                           inverse_q_oracle(1e-9) / std::numbers::ln2;
    CHECK(rate == doctest::Approx(shannon - penalty).epsilon(1e-9));
    CHECK(rate == doctest::Approx(3.46e7).epsilon(0.005));
  }
  SUBCASE("always below Shannon for positive SINR") {
    for (double g : {0.5, 1.0, 4.0, 40.0, 900.0}) {
      CHECK(urllc_rate(g, 10e6, 256, 1e-9) < 10e6 * std::log2(1.0 + g));
    }
  }
  SUBCASE("deep low-SINR regime clamps to zero") {
    CHECK(urllc_rate(1e-6, 10e6, 256, 1e-9) == 0.0);
  }
  SUBCASE("nondecreasing in SINR and blocklength on a grid") {
    double prev = -1.0;
    for (int i = 0; i <= 2000; ++i) {
      const double g = i * 0.5;
      const double r = urllc_rate(g, 10e6, 256, 1e-9);
      CHECK(r >= prev);
      prev = r;
    }
    CHECK(urllc_rate(15.0, 10e6, 512, 1e-9) >=
          urllc_rate(15.0, 10e6, 256, 1e-9));
  }
}

TEST_CASE("uplink latency is the slowest used destination") {
  {
    const double f[1] = {1.0};
    const double r[1] = {1e7};
    CHECK(uplink_latency(f, 1e6, r) == doctest::Approx(0.1));
  }
  {
    const double f[2] = {0.5, 0.5};
    const double r[2] = {1e7, 1e7};
    CHECK(uplink_latency(f, 1e6, r) == doctest::Approx(0.5 * 1e6 / 1e7));
  }
  {
    const double f[2] = {0.9, 0.1};
    const double r[2] = {1e7, 1e6};
    CHECK(uplink_latency(f, 1e6, r) == doctest::Approx(1e-7 * 1e6));
  }
  {
    const double f[2] = {0.9, 0.1};
    const double r[2] = {1e7, 0.0};
    CHECK_THROWS_AS(uplink_latency(f, 1e6, r), ChannelError);
  }
}

TEST_CASE("rendering scales the payload") {
  CHECK(render_size(123.0, 1.0) == 123.0);
  CHECK(render_size(1e6, 10.0) == doctest::Approx(1e7));
  RngStream rng(5);
  double acc = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) acc += render_size(1.0, rng.uniform(1.0, 10.0));
  CHECK(acc / n == doctest::Approx(5.5).epsilon(0.01 / 5.5));
}

TEST_CASE("downlink latency and energy") {
  CHECK(downlink_latency(2e6, 1e7) == doctest::Approx(0.2));
  CHECK_THROWS_AS(downlink_latency(2e6, 0.0), ChannelError);
  {
    const double p[2] = {0.0, 0.0};
    const double r[2] = {1e6, 2e6};
    CHECK(downlink_energy(p, r) == 0.0);
  }
  {
    const double p[2] = {10.0, 20.0};
    const double r[2] = {1e6, 2e6};
    CHECK(downlink_energy(p, r) == doctest::Approx(5e7));
  }
  {
    // linear in each power entry at fixed rates
    const double r[2] = {1e6, 2e6};
    const double p1[2] = {3.0, 7.0};
    const double p2[2] = {6.0, 7.0};
    const double base[2] = {0.0, 7.0};
    CHECK(downlink_energy(p2, r) - downlink_energy(base, r) ==
          doctest::Approx(2.0 * (downlink_energy(p1, r) -
                                 downlink_energy(base, r))));
  }
}
