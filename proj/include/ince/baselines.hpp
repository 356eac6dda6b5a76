#pragma once

#include <span>

#include "ince/channel.hpp"
#include "ince/config.hpp"
#include "ince/game.hpp"
#include "ince/rng.hpp"

namespace ince {

// Random coin-flip offloading truncated to the capacity, uniform power.
OperatorDecision gm_rn(const ScenarioConfig& cfg, RngStream& rng);

// Half the users collaborative (lowest indices, capped at the capacity),
// midpoint power for everyone.
OperatorDecision equal_policy(const ScenarioConfig& cfg);

// Collaboration for the highest gain-times-headroom users, power scaled by
// the normalized channel gain.
OperatorDecision proportional_policy(const ScenarioConfig& cfg,
                                     const ChannelRealization& ch,
                                     std::span<const double> inc_load_cycles);

}  // namespace ince
