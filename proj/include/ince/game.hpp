#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ince/channel.hpp"
#include "ince/compute.hpp"
#include "ince/config.hpp"
#include "ince/requests.hpp"

namespace ince {

// Leader's per-slot announcement: offloading mode and downlink power.
struct OperatorDecision {
  std::vector<std::uint8_t> collaborate;  // o[m]
  std::vector<double> dl_power_w;         // p'[m]
};

struct SplitChoice {
  double inc_fraction = 0.0;  // portion preprocessed at the selected node
  double inc_share = 1.0;     // requested compute share at that node
};

struct StrategyProfile {
  std::vector<int> channel;        // s[m]; 0 = direct to the edge server
  std::vector<SplitChoice> split;  // meaningful when channel[m] > 0

  static StrategyProfile all_direct(int num_users) {
    return {std::vector<int>(num_users, 0),
            std::vector<SplitChoice>(num_users)};
  }
};

struct SplitResult {
  SplitChoice split;
  double score = 0.0;      // utility gain over the direct path
  double latency_s = 0.0;  // estimated collaborative end-to-end latency
  bool feasible = false;   // latency bound met at the returned split
  bool converged = false;
  double residual = 0.0;
  int iterations = 0;
};

struct DynamicsResult {
  StrategyProfile profile;
  int rounds = 0;
  int moves = 0;
  bool converged = false;
  bool equilibrium = false;  // verified by the closing deviation sweep
};

struct InterferenceTolerance {
  double budget_s = 0.0;        // uplink time available under the bound
  double rate_needed_bps = 0.0;
  double sinr_needed = 0.0;
  double tolerance_w = 0.0;     // co-channel power the user can absorb
  bool attainable = false;
};

// The followers' channel-selection game for one slot, played against the
// operator's announced decision.
//
// Channel scores are decision-time estimates: solo-occupancy uplink rates,
// the announced downlink power, twin-reported compute rates and the previous
// slot's node loads. The direct path is the zero reference of every score,
// so the potential of a profile is the sum of the occupants' scores and a
// unilateral deviation moves the potential by exactly the deviator's change.
// Crowding enters through the association-capacity feasibility check and
// through the realized slot outcomes, not through the scores.
class SlotGame {
 public:
  SlotGame(const ScenarioConfig& cfg, const ChannelRealization& ch,
           const OperatorDecision& decision, std::span<const TaskSpec> tasks,
           std::span<const std::uint8_t> active,
           std::span<const double> prev_cn_load_cycles,
           double prev_mec_load_cycles);

  int num_users() const { return m_count_; }
  int num_channels() const { return k_count_; }

  // Utility gain of user m on channel k over its own direct path; zero for
  // k == 0 and for users outside the game.
  double score(int m, int k) const;

  // Utility of m under the profile: the channel score minus the announced
  // downlink energy term (channel-independent).
  double utility(int m, const StrategyProfile& p) const;

  const SplitResult& split_result(int m, int k) const;

  // Collaborative channels whose refined split meets the latency bound and
  // whose node still has association headroom; empty when o_m = 0.
  std::vector<int> feasible_channels(int m, const StrategyProfile& p) const;

  // Argmax of the score over {direct} + feasible channels, ties to the
  // lowest index (direct first). Returns the channel.
  int best_response(int m, const StrategyProfile& p) const;

  // Exact potential of a profile.
  double potential(const StrategyProfile& p) const;

  // Round-robin best replies from the all-direct profile until a full pass
  // makes no change; verifies the terminal profile with a deviation sweep.
  DynamicsResult run_dynamics(int max_rounds) const;
  DynamicsResult run_dynamics(StrategyProfile start, int max_rounds) const;

  // Primal-dual split refinement for user m on channel k.
  SplitResult refine_split(int m, int k, SplitChoice init) const;

  // Analysis helper: how much co-channel interference user m could tolerate
  // on channel k before its refined split misses the latency bound.
  InterferenceTolerance interference_tolerance(int m, int k) const;

  bool in_game(int m) const { return active_[m] && collaborate_[m]; }
  double direct_total_s(int m) const { return direct_total_[m]; }
  double ul_rate_estimate(int m) const { return ul_rate_est_[m]; }
  double dl_tx_estimate(int m) const { return dl_tx_est_[m]; }
  double cn_queue_estimate(int k) const { return cn_queue_est_[k - 1]; }
  double mec_queue_estimate() const { return mec_queue_est_; }

  // Test hook: overrides the refined splits with fixed ones and recomputes
  // the score table from them.
  void freeze_splits(const std::vector<std::vector<SplitChoice>>& splits);

 private:
  double collab_total_s(int m, int k, const SplitChoice& s) const;

  const ScenarioConfig& cfg_;
  int m_count_ = 0;
  int k_count_ = 0;
  std::vector<std::uint8_t> active_;
  std::vector<std::uint8_t> collaborate_;
  std::vector<TaskSpec> tasks_;
  std::vector<double> ul_rate_est_;
  std::vector<double> ul_sinr_est_;
  std::vector<double> dl_rate_est_;
  std::vector<double> dl_tx_est_;
  std::vector<double> dl_energy_est_;
  std::vector<double> direct_total_;            // per user
  std::vector<double> cn_queue_est_;            // per node
  double mec_queue_est_ = 0.0;
  std::vector<std::vector<SplitResult>> table_;  // [m][k-1]
};

}  // namespace ince
