#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ince/baselines.hpp"
#include "ince/config.hpp"
#include "ince/marl.hpp"
#include "ince/sim.hpp"

namespace ince {

struct SlotView {
  const ScenarioConfig& cfg;
  const RequestState& requests;
  std::span<const TaskSpec> tasks;
  std::span<const std::uint8_t> active;
  const ChannelRealization& ch;
  std::span<const double> prev_cn_load_cycles;
  double prev_mec_load_cycles;
};

struct DecideResult {
  OperatorDecision decision;
  std::optional<SlotRecord> record;  // present for learned operators
};

class OperatorPolicy {
 public:
  virtual ~OperatorPolicy() = default;
  virtual DecideResult decide(const SlotView& view, RngStream& rng) = 0;
  virtual std::string name() const = 0;
};

class BaselineOperator : public OperatorPolicy {
 public:
  enum class Kind { GmRn, Equal, Proportional };
  static Kind parse(const std::string& name);

  explicit BaselineOperator(Kind kind) : kind_(kind) {}
  DecideResult decide(const SlotView& view, RngStream& rng) override;
  std::string name() const override;

 private:
  Kind kind_;
};

class LearnedOperator : public OperatorPolicy {
 public:
  explicit LearnedOperator(PolicyNet net) : net_(std::move(net)) {}
  DecideResult decide(const SlotView& view, RngStream& rng) override;
  std::string name() const override { return variant_name(net_.variant); }
  PolicyNet& net() { return net_; }
  const PolicyNet& net() const { return net_; }

 private:
  PolicyNet net_;
};

struct SlotSnapshot {
  int slot = 0;
  RequestState requests;
  std::vector<TaskSpec> tasks;
  std::vector<std::uint8_t> active;
  OperatorDecision decision;
  StrategyProfile profile;
  int ne_rounds = 0;
  int ne_moves = 0;
  bool ne_converged = false;
  bool ne_equilibrium = false;
  SlotOutcome outcome;
};

struct EpisodeResult {
  std::vector<SlotSnapshot> slots;
  TrajectoryBuffer buffer;  // populated for learned operators
  double reward_ul_mean = 0.0;
  double reward_dl_mean = 0.0;
  double reward_gl_mean = 0.0;
  double utility_mean = 0.0;      // per-slot system utility
  double max_ul_rate_mean = 0.0;  // per-slot best uplink rate
  double energy_total = 0.0;
  double latency_mean = 0.0;  // over active user-slots
  int violations = 0;
  double ne_rounds_mean = 0.0;
  bool all_converged = true;
};

// Leader announcement, follower game to its equilibrium, realized outcomes,
// rewards; slot after slot.
EpisodeResult run_episode(OperatorPolicy& policy, const ScenarioConfig& cfg,
                          RngStreams& streams);

struct EpisodeStats {
  int episode = 0;
  double reward_ul = 0.0, reward_dl = 0.0, reward_gl = 0.0;
  double utility = 0.0, max_ul_rate = 0.0, energy = 0.0, latency = 0.0;
  int violations = 0;
  double ne_rounds = 0.0;
};

struct RunSummary {
  std::string run_id;
  std::string policy;
  std::uint64_t config_hash_value = 0;
  std::uint64_t seed = 0;
  int episodes = 0;
  std::vector<EpisodeStats> per_episode;
  // normalized trapezoidal AUC per metric, keyed like the CSV columns
  std::vector<std::pair<std::string, double>> auc;
  std::optional<double> pg_user_median;
  std::optional<double> pg_operator_median;
};

// empirical distribution at the sample points
std::vector<std::pair<double, double>> compute_cdf(std::vector<double> samples);

double normalized_auc(std::span<const double> series);

struct RunPaths {
  std::string dir;
  std::string slots_csv() const { return dir + "/slots.csv"; }
  std::string episodes_csv() const { return dir + "/episodes.csv"; }
  std::string summary_json() const { return dir + "/summary.json"; }
  std::string config_json() const { return dir + "/config.json"; }
  std::string checkpoint() const { return dir + "/checkpoint.bin"; }
  std::string pg_user_csv() const { return dir + "/pg_user.csv"; }
  std::string pg_slot_csv() const { return dir + "/pg_slot.csv"; }
  std::string cdf_user_csv() const { return dir + "/cdf_user.csv"; }
  std::string cdf_operator_csv() const { return dir + "/cdf_operator.csv"; }
};

struct RunResult {
  RunSummary summary;
  RunPaths paths;
};

// Training loop: rollout, update, log; writes checkpoint and summaries.
RunResult train(const ScenarioConfig& cfg, CriticVariant variant,
                int episodes, const std::string& out_dir);

// Frozen-policy rollouts; when `reference_dir` is set, user- and
// operator-level cost gains against that run are computed and written.
RunResult evaluate(OperatorPolicy& policy, const ScenarioConfig& cfg,
                   int episodes, const std::string& out_dir,
                   const std::optional<std::string>& reference_dir);

std::string make_run_id(const ScenarioConfig& cfg, const std::string& policy,
                        int episodes);

}  // namespace ince
