#include "ince/sim.hpp"

#include <algorithm>
#include <cmath>

#include "ince/marl.hpp"

namespace ince {

namespace {

struct PathContext {
  const ScenarioConfig& cfg;
  const ChannelRealization& ch;
  const OperatorDecision& decision;
  std::span<const TaskSpec> tasks;
  std::span<const std::uint8_t> active;
  std::vector<int> channel_of;       // per user, -1 idle
  std::vector<double> tx_power;
  std::vector<double> dl_rate;
  double noise = 0.0;
  DtEstimate mec_dt;
};

// Builds one user's latency breakdown for an arbitrary channel assignment
// view; the queue terms are supplied by the slot-order accounting.
LatencyBreakdown build_path(const PathContext& ctx, int m, int channel,
                            const SplitChoice& split, double cn_queue_s,
                            double mec_queue_s,
                            std::span<const int> channel_view) {
  const TaskSpec& task = ctx.tasks[m];
  LatencyBreakdown b;
  b.collaborative = channel > 0;

  const double sinr = uplink_sinr(m, channel_view, ctx.tx_power, ctx.ch,
                                  ctx.noise);
  const double ul_rate = urllc_rate(sinr, ctx.cfg.bandwidth_hz,
                                    ctx.cfg.blocklength,
                                    ctx.cfg.decoding_error);
  if (ul_rate > 0) {
    const double fractions[1] = {1.0};
    const double rates[1] = {ul_rate};
    b.ul_tx = uplink_latency(fractions, task.input_bits, rates);
  } else {
    b.ul_tx = task.latency_bound_s;
    b.link_infeasible = true;
  }

  double mec_fraction = 1.0;
  if (b.collaborative) {
    const DtEstimate cn_dt = DtEstimate::from_fraction(
        ctx.cfg.inc_rates_hz[channel - 1], ctx.cfg.dt_discrepancy);
    b.cn_exec = cn_exec_latency(split.inc_fraction, task.cycles, cn_dt,
                                split.inc_share);
    b.cn_queue = cn_queue_s;
    mec_fraction = 1.0 - split.inc_fraction;
    b.forward = forwarding_delay(mec_fraction * task.input_bits,
                                 ctx.cfg.wired_base_s, ctx.cfg.backhaul_bps);
  }
  b.mec_exec = mec_exec_latency(mec_fraction, task.cycles, ctx.mec_dt);
  b.mec_queue = mec_queue_s;

  if (ctx.dl_rate[m] > 0) {
    b.dl_tx = downlink_latency(task.rendered_bits(), ctx.dl_rate[m]);
  } else {
    b.dl_tx = task.latency_bound_s;
    b.link_infeasible = true;
  }
  finalize_total(b);
  b.bound_violated = b.total > task.latency_bound_s + 1e-12;
  return b;
}

}  // namespace

SlotOutcome evaluate_slot(const ScenarioConfig& cfg,
                          const ChannelRealization& ch,
                          const OperatorDecision& decision,
                          std::span<const TaskSpec> tasks,
                          std::span<const std::uint8_t> active,
                          const StrategyProfile& profile) {
  const int m_count = cfg.num_users;
  SlotOutcome out;
  out.users.resize(m_count);
  out.inc_loads.assign(cfg.num_inc, 0);
  out.cn_cycles.assign(cfg.num_inc, 0.0);

  PathContext ctx{cfg, ch, decision, tasks, active, {}, {}, {}, 0.0,
                  DtEstimate::from_fraction(cfg.mec_rate_hz,
                                            cfg.dt_discrepancy)};
  ctx.noise = noise_power_w(cfg);
  ctx.channel_of.assign(m_count, -1);
  ctx.tx_power.assign(m_count, cfg.ul_power_w);
  ctx.dl_rate.assign(m_count, 0.0);

  for (int m = 0; m < m_count; ++m) {
    if (!active[m]) continue;
    ctx.channel_of[m] = profile.channel[m];
    if (profile.channel[m] > 0) out.inc_loads[profile.channel[m] - 1]++;
    ctx.dl_rate[m] =
        urllc_rate(downlink_sinr(m, decision.dl_power_w[m], ch, ctx.noise),
                   cfg.bandwidth_hz, cfg.blocklength, cfg.decoding_error);
  }

  // slot-local queue accounting, single writer, user-index order
  std::vector<double> utilities(m_count, 0.0);
  std::vector<double> cost_latency, cost_energy;
  for (int m = 0; m < m_count; ++m) {
    UserSlotOutcome& u = out.users[m];
    u.active = active[m] != 0;
    if (!u.active) continue;

    const int s_m = profile.channel[m];
    u.channel = s_m;
    u.split = s_m > 0 ? profile.split[m] : SplitChoice{};
    if (s_m != 0 && !decision.collaborate[m]) out.coupling_ok = false;

    double cn_queue_s = 0.0;
    if (s_m > 0) {
      cn_queue_s = queue_delay(out.cn_cycles[s_m - 1],
                               cfg.inc_rates_hz[s_m - 1]);
    }
    const double mec_queue_s = queue_delay(out.mec_cycles, cfg.mec_rate_hz);

    u.latency = build_path(ctx, m, s_m, u.split, cn_queue_s, mec_queue_s,
                           ctx.channel_of);
    const double ul_sinr =
        uplink_sinr(m, ctx.channel_of, ctx.tx_power, ctx.ch, ctx.noise);
    u.ul_rate_bps = urllc_rate(ul_sinr, cfg.bandwidth_hz, cfg.blocklength,
                               cfg.decoding_error);
    u.dl_rate_bps = ctx.dl_rate[m];

    if (s_m == 0) {
      // the direct path is its own reference
      u.ref_total_s = u.latency.total;
    } else {
      std::vector<int> view(ctx.channel_of.begin(), ctx.channel_of.end());
      view[m] = 0;
      LatencyBreakdown ref = build_path(ctx, m, 0, SplitChoice{}, 0.0,
                                        mec_queue_s, view);
      u.ref_total_s = ref.total;
    }

    u.dl_energy = cfg.energy_model == "latency"
                      ? decision.dl_power_w[m] * u.latency.dl_tx
                      : decision.dl_power_w[m] * u.dl_rate_bps;
    u.utility = user_utility(u.ref_total_s, u.latency.total, u.dl_energy, cfg);
    utilities[m] = u.utility;
    u.pg_latency_s = u.latency.bound_violated ? tasks[m].latency_bound_s
                                              : u.latency.total;

    // commit this user's work to the queues
    const double inc_part = s_m > 0 ? u.split.inc_fraction : 0.0;
    if (s_m > 0) out.cn_cycles[s_m - 1] += inc_part * tasks[m].cycles;
    out.mec_cycles += (1.0 - inc_part) * tasks[m].cycles;

    out.max_ul_rate_bps = std::max(out.max_ul_rate_bps, u.ul_rate_bps);
    out.total_energy += u.dl_energy;
    if (u.latency.bound_violated) out.violations++;
    cost_latency.push_back(u.latency.total);
    cost_energy.push_back(u.dl_energy);
  }

  out.sum_utility = 0.0;
  for (double v : utilities) out.sum_utility += v;
  out.cost = operator_cost(cost_latency, cost_energy);
  out.reward_ul = ul_reward(out.inc_loads, cfg.inc_assoc_capacity);
  out.reward_dl = dl_reward(decision.dl_power_w, cfg);
  out.reward_gl = gl_reward(utilities, cfg);
  return out;
}

}  // namespace ince
