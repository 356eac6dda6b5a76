#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ince/harness.hpp"

using namespace ince;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioConfig quick_cfg() {
  return parse_config(R"({
    "num_users": 4, "num_inc": 2, "ofmo_capacity": 4,
    "learning": {"hidden": 8, "episode_slots": 12, "minibatch": 8}
  })");
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("episodes run end to end and respect the coupling") {
  ScenarioConfig cfg = quick_cfg();
  RngStreams streams = RngStreams::make(cfg.seed);
  BaselineOperator op(BaselineOperator::Kind::GmRn);
  const EpisodeResult ep = run_episode(op, cfg, streams);
  REQUIRE(ep.slots.size() == 12);
  for (const auto& s : ep.slots) {
    CHECK(s.outcome.coupling_ok);
    CHECK(s.ne_converged);
    for (int m = 0; m < cfg.num_users; ++m) {
      CHECK(s.profile.channel[m] * (1 - s.decision.collaborate[m]) == 0);
      const auto& u = s.outcome.users[m];
      if (!u.active) {
        CHECK(u.utility == 0.0);
        CHECK(u.dl_energy == 0.0);
        CHECK(u.channel == -1);
      } else if (u.channel == 0) {
        // the direct path is its own reference
        CHECK(u.ref_total_s == u.latency.total);
        CHECK(u.utility ==
              doctest::Approx(-cfg.utility_energy_weight * u.dl_energy));
      }
    }
    CHECK(s.outcome.reward_dl <= 0.0);
    CHECK(s.outcome.reward_dl >= -0.5);
    const double r = s.outcome.reward_ul;
    CHECK((r == -1.0 || r == 0.0 || r == 1.0));
  }
}

TEST_CASE("identical seeds produce byte-identical run outputs") {
  ScenarioConfig cfg = quick_cfg();
  TempDir a("ince_test_det_a"), b("ince_test_det_b");
  {
    BaselineOperator op(BaselineOperator::Kind::GmRn);
    evaluate(op, cfg, 2, a.str(), std::nullopt);
  }
  {
    BaselineOperator op(BaselineOperator::Kind::GmRn);
    evaluate(op, cfg, 2, b.str(), std::nullopt);
  }
  const RunPaths pa{a.str()}, pb{b.str()};
  CHECK(read_file(pa.slots_csv()) == read_file(pb.slots_csv()));
  CHECK(read_file(pa.episodes_csv()) == read_file(pb.episodes_csv()));
}

TEST_CASE("training writes checkpoints and summaries") {
  ScenarioConfig cfg = quick_cfg();
  TempDir dir("ince_test_train");
  const RunResult run = train(cfg, CriticVariant::AC, 2, dir.str());
  CHECK(std::filesystem::exists(run.paths.checkpoint()));
  CHECK(std::filesystem::exists(run.paths.summary_json()));
  CHECK(run.summary.per_episode.size() == 2);
  const PolicyNet net =
      load_checkpoint(run.paths.checkpoint(), cfg, config_hash(cfg));
  CHECK(net.variant == CriticVariant::AC);

  SUBCASE("summary AUC matches a recompute from the episodes CSV") {
    std::ifstream in(run.paths.episodes_csv());
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> gl;
    while (std::getline(in, line)) {
      std::istringstream ss(line);
      std::string tok;
      for (int col = 0; col <= 3; ++col) std::getline(ss, tok, ',');
      gl.push_back(std::stod(tok));
    }
    REQUIRE(gl.size() == 2);
    double from_summary = -1.0;
    for (const auto& [k, v] : run.summary.auc) {
      if (k == "reward_gl") from_summary = v;
    }
    CHECK(std::abs(normalized_auc(gl) - from_summary) < 1e-9);
  }
}

TEST_CASE("evaluating a run against itself gives unit cost gains") {
  ScenarioConfig cfg = quick_cfg();
  TempDir ref("ince_test_pg_ref"), alg("ince_test_pg_alg");
  {
    BaselineOperator op(BaselineOperator::Kind::Equal);
    evaluate(op, cfg, 2, ref.str(), std::nullopt);
  }
  BaselineOperator op(BaselineOperator::Kind::Equal);
  const RunResult run = evaluate(op, cfg, 2, alg.str(), ref.str());
  REQUIRE(run.summary.pg_user_median.has_value());
  CHECK(*run.summary.pg_user_median == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE(run.summary.pg_operator_median.has_value());
  CHECK(*run.summary.pg_operator_median ==
        doctest::Approx(1.0).epsilon(1e-9));
  // the user-level distribution is a step at 1
  std::ifstream in(run.paths.cdf_user_csv());
  REQUIRE(in);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    CHECK(line.substr(0, 2) == "1,");
  }
}

TEST_CASE("empirical distribution function") {
  const auto cdf = compute_cdf({3.0, 1.0, 2.0});
  REQUIRE(cdf.size() == 3);
  CHECK(cdf[0] == std::pair<double, double>{1.0, 1.0 / 3});
  CHECK(cdf[1].first == 2.0);
  CHECK(cdf[1].second == doctest::Approx(2.0 / 3));
  CHECK(cdf[2] == std::pair<double, double>{3.0, 1.0});

  const auto flat = compute_cdf({5.0, 5.0, 5.0});
  for (const auto& [v, f] : flat) CHECK(v == 5.0);
  CHECK(flat.back().second == 1.0);

  CHECK_THROWS_AS(compute_cdf(std::vector<double>{}), std::invalid_argument);

  RngStream rng(12);
  std::vector<double> uniform(10000);
  for (double& v : uniform) v = rng.uniform();
  const auto ecdf = compute_cdf(uniform);
  for (size_t i = 0; i < ecdf.size(); i += 97) {
    CHECK(std::abs(ecdf[i].first - ecdf[i].second) < 0.02);
  }
}

TEST_CASE("learned operators roll out deterministically") {
  ScenarioConfig cfg = quick_cfg();
  TempDir a("ince_test_learned_a"), b("ince_test_learned_b");
  {
    RngStreams streams = RngStreams::make(cfg.seed);
    PolicyNet net =
        PolicyNet::make(cfg, CriticVariant::AHMRL, streams.policy_init);
    LearnedOperator op(std::move(net));
    evaluate(op, cfg, 2, a.str(), std::nullopt);
  }
  {
    RngStreams streams = RngStreams::make(cfg.seed);
    PolicyNet net =
        PolicyNet::make(cfg, CriticVariant::AHMRL, streams.policy_init);
    LearnedOperator op(std::move(net));
    evaluate(op, cfg, 2, b.str(), std::nullopt);
  }
  const RunPaths pa{a.str()}, pb{b.str()};
  CHECK(read_file(pa.slots_csv()) == read_file(pb.slots_csv()));
}
