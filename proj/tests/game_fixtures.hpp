#pragma once

// Shared random-instance builder for the channel-selection game tests.

#include <string>
#include <vector>

#include "ince/channel.hpp"
#include "ince/config.hpp"
#include "ince/game.hpp"
#include "ince/requests.hpp"
#include "ince/rng.hpp"

namespace ince::testing {

struct GameInstance {
  ScenarioConfig cfg;
  ChannelRealization ch;
  OperatorDecision decision;
  std::vector<TaskSpec> tasks;
  std::vector<std::uint8_t> active;
  std::vector<double> cn_loads;
  double mec_load = 0.0;

  SlotGame make_game() const {
    return SlotGame(cfg, ch, decision, tasks, active, cn_loads, mec_load);
  }
};

struct InstanceOptions {
  bool generous_bounds = false;  // widen latency bounds so channels stay open
  bool fast_nodes = false;       // draw node rates that can beat the server
};

inline GameInstance random_instance(RngStream& rng, int num_users,
                                    int num_inc,
                                    const InstanceOptions& opt = {}) {
  GameInstance inst;
  ScenarioConfig& cfg = inst.cfg;
  cfg = parse_config("");
  cfg.num_users = num_users;
  cfg.num_inc = num_inc;
  cfg.ofmo_capacity = num_users;
  // keep utilities at unit scale so absolute-tolerance identities are
  // meaningful in double precision
  cfg.energy_model = "latency";
  cfg.inc_rates_hz.clear();
  for (int k = 0; k < num_inc; ++k) {
    cfg.inc_rates_hz.push_back(opt.fast_nodes ? rng.uniform(20e9, 60e9)
                                              : rng.uniform(1e9, 9e9));
  }
  if (opt.generous_bounds) {
    cfg.latency_bound_lo_s = 0.5;
    cfg.latency_bound_hi_s = 2.0;
  }

  inst.ch = draw_realization(cfg, rng);
  inst.decision.collaborate.resize(num_users);
  inst.decision.dl_power_w.resize(num_users);
  inst.tasks.resize(num_users);
  inst.active.resize(num_users);
  for (int m = 0; m < num_users; ++m) {
    inst.active[m] = rng.uniform() < 0.85 ? 1 : 0;
    inst.decision.collaborate[m] = rng.uniform() < 0.75 ? 1 : 0;
    inst.decision.dl_power_w[m] =
        rng.uniform(cfg.dl_power_min_w, cfg.dl_power_max_w);
    if (inst.active[m]) {
      inst.tasks[m] = sample_task(1 + (m % cfg.request.num_tasks), cfg, rng);
    }
  }
  inst.cn_loads.assign(num_inc, 0.0);
  for (double& load : inst.cn_loads) load = rng.uniform(0.0, 2e9);
  inst.mec_load = rng.uniform(0.0, 5e9);
  return inst;
}

inline std::vector<std::vector<SplitChoice>> random_splits(RngStream& rng,
                                                           int num_users,
                                                           int num_inc) {
  std::vector<std::vector<SplitChoice>> splits(
      num_users, std::vector<SplitChoice>(num_inc));
  for (auto& row : splits) {
    for (auto& s : row) {
      s.inc_fraction = rng.uniform();
      s.inc_share = rng.uniform(0.05, 1.0);
    }
  }
  return splits;
}

}  // namespace ince::testing
