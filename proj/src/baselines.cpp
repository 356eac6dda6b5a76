#include "ince/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ince {

OperatorDecision gm_rn(const ScenarioConfig& cfg, RngStream& rng) {
  OperatorDecision d;
  d.collaborate.assign(cfg.num_users, 0);
  d.dl_power_w.resize(cfg.num_users);
  std::vector<int> selected;
  for (int m = 0; m < cfg.num_users; ++m) {
    if (rng.uniform() < 0.5) {
      d.collaborate[m] = 1;
      selected.push_back(m);
    }
    d.dl_power_w[m] = rng.uniform(cfg.dl_power_min_w, cfg.dl_power_max_w);
  }
  // random truncation down to the capacity
  while (static_cast<int>(selected.size()) > cfg.ofmo_capacity) {
    const int drop = rng.uniform_int(0, static_cast<int>(selected.size()) - 1);
    d.collaborate[selected[drop]] = 0;
    selected.erase(selected.begin() + drop);
  }
  return d;
}

OperatorDecision equal_policy(const ScenarioConfig& cfg) {
  OperatorDecision d;
  d.collaborate.assign(cfg.num_users, 0);
  const int want = (cfg.num_users + 1) / 2;
  const int count = std::min(want, cfg.ofmo_capacity);
  for (int m = 0; m < count; ++m) d.collaborate[m] = 1;
  d.dl_power_w.assign(cfg.num_users,
                      0.5 * (cfg.dl_power_min_w + cfg.dl_power_max_w));
  return d;
}

OperatorDecision proportional_policy(const ScenarioConfig& cfg,
                                     const ChannelRealization& ch,
                                     std::span<const double> inc_load_cycles) {
  OperatorDecision d;
  d.collaborate.assign(cfg.num_users, 0);
  d.dl_power_w.assign(cfg.num_users, cfg.dl_power_min_w);

  double headroom = 0.0;
  for (int k = 0; k < cfg.num_inc; ++k) {
    headroom += std::max(0.0, cfg.inc_rates_hz[k] - inc_load_cycles[k]);
  }
  std::vector<int> order(cfg.num_users);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return ch.gain[a] * headroom > ch.gain[b] * headroom;
  });
  for (int i = 0; i < std::min(cfg.ofmo_capacity, cfg.num_users); ++i) {
    d.collaborate[order[i]] = 1;
  }
  const double gmax =
      *std::max_element(ch.gain.begin(), ch.gain.end());
  for (int m = 0; m < cfg.num_users; ++m) {
    const double ratio = gmax > 0 ? ch.gain[m] / gmax : 0.0;
    d.dl_power_w[m] =
        cfg.dl_power_min_w + ratio * (cfg.dl_power_max_w - cfg.dl_power_min_w);
  }
  return d;
}

}  // namespace ince
