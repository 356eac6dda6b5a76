#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ince/channel.hpp"
#include "ince/compute.hpp"
#include "ince/config.hpp"
#include "ince/game.hpp"
#include "ince/requests.hpp"

namespace ince {

struct UserSlotOutcome {
  bool active = false;
  int channel = -1;  // -1 = idle this slot
  SplitChoice split;
  LatencyBreakdown latency;
  double ref_total_s = 0.0;  // direct-path counterfactual, same slot state
  double ul_rate_bps = 0.0;
  double dl_rate_bps = 0.0;
  double dl_energy = 0.0;
  double utility = 0.0;
  double pg_latency_s = 0.0;  // bound-capped latency used by cost gains
};

struct SlotOutcome {
  std::vector<UserSlotOutcome> users;
  std::vector<int> inc_loads;     // association count per node
  std::vector<double> cn_cycles;  // work left at each node this slot
  double mec_cycles = 0.0;
  double reward_ul = 0.0;
  double reward_dl = 0.0;
  double reward_gl = 0.0;
  double cost = 0.0;  // latency-plus-energy network cost
  double sum_utility = 0.0;
  double total_energy = 0.0;
  double max_ul_rate_bps = 0.0;
  int violations = 0;
  bool coupling_ok = true;
};

// Realizes one slot after the followers' game: true co-channel interference,
// slot-local queue accounting in user order, twin-discrepancy execution and
// the announced downlink powers.
SlotOutcome evaluate_slot(const ScenarioConfig& cfg,
                          const ChannelRealization& ch,
                          const OperatorDecision& decision,
                          std::span<const TaskSpec> tasks,
                          std::span<const std::uint8_t> active,
                          const StrategyProfile& profile);

}  // namespace ince
