#include "ince/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ince {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

SlotGame::SlotGame(const ScenarioConfig& cfg, const ChannelRealization& ch,
                   const OperatorDecision& decision,
                   std::span<const TaskSpec> tasks,
                   std::span<const std::uint8_t> active,
                   std::span<const double> prev_cn_load_cycles,
                   double prev_mec_load_cycles)
    : cfg_(cfg), m_count_(cfg.num_users), k_count_(cfg.num_inc) {
  active_.assign(active.begin(), active.end());
  collaborate_.assign(decision.collaborate.begin(),
                      decision.collaborate.end());
  tasks_.assign(tasks.begin(), tasks.end());
  ul_rate_est_.assign(m_count_, 0.0);
  ul_sinr_est_.assign(m_count_, 0.0);
  dl_rate_est_.assign(m_count_, 0.0);
  dl_tx_est_.assign(m_count_, 0.0);
  dl_energy_est_.assign(m_count_, 0.0);
  direct_total_.assign(m_count_, 0.0);
  cn_queue_est_.assign(k_count_, 0.0);
  table_.assign(m_count_, std::vector<SplitResult>(k_count_));

  const double noise = noise_power_w(cfg);
  for (int k = 0; k < k_count_; ++k) {
    cn_queue_est_[k] = queue_delay(prev_cn_load_cycles[k], cfg.inc_rates_hz[k]);
  }
  mec_queue_est_ = queue_delay(prev_mec_load_cycles, cfg.mec_rate_hz);
  const DtEstimate mec_dt =
      DtEstimate::from_fraction(cfg.mec_rate_hz, cfg.dt_discrepancy);

  for (int m = 0; m < m_count_; ++m) {
    if (!active_[m]) continue;
    const TaskSpec& task = tasks_[m];
    // solo-occupancy link estimates at the announced power
    double hsq = 0.0;
    for (const auto& h : ch.fading_ul[m]) hsq += std::norm(h);
    ul_sinr_est_[m] = cfg.ul_power_w * ch.gain[m] * hsq / noise;
    ul_rate_est_[m] =
        urllc_rate(ul_sinr_est_[m], cfg.bandwidth_hz, cfg.blocklength,
                   cfg.decoding_error);
    dl_rate_est_[m] =
        urllc_rate(downlink_sinr(m, decision.dl_power_w[m], ch, noise),
                   cfg.bandwidth_hz, cfg.blocklength, cfg.decoding_error);
    dl_tx_est_[m] = dl_rate_est_[m] > 0
                        ? std::min(task.rendered_bits() / dl_rate_est_[m],
                                   task.latency_bound_s)
                        : task.latency_bound_s;
    dl_energy_est_[m] =
        cfg.energy_model == "latency"
            ? decision.dl_power_w[m] * dl_tx_est_[m]
            : decision.dl_power_w[m] * dl_rate_est_[m];

    const double ul_tx = ul_rate_est_[m] > 0
                             ? task.input_bits / ul_rate_est_[m]
                             : task.latency_bound_s;
    direct_total_[m] = ul_tx + mec_exec_latency(1.0, task.cycles, mec_dt) +
                       mec_queue_est_ + dl_tx_est_[m];

    if (!collaborate_[m]) continue;
    for (int k = 1; k <= k_count_; ++k) {
      table_[m][k - 1] = refine_split(m, k, SplitChoice{0.5, 0.5});
    }
  }
}

double SlotGame::collab_total_s(int m, int k, const SplitChoice& s) const {
  const TaskSpec& task = tasks_[m];
  const double ul_tx = ul_rate_est_[m] > 0
                           ? task.input_bits / ul_rate_est_[m]
                           : task.latency_bound_s;
  const DtEstimate cn_dt =
      DtEstimate::from_fraction(cfg_.inc_rates_hz[k - 1], cfg_.dt_discrepancy);
  const DtEstimate mec_dt =
      DtEstimate::from_fraction(cfg_.mec_rate_hz, cfg_.dt_discrepancy);
  const double remainder = 1.0 - s.inc_fraction;
  return ul_tx +
         cn_exec_latency(s.inc_fraction, task.cycles, cn_dt, s.inc_share) +
         cn_queue_est_[k - 1] +
         forwarding_delay(remainder * task.input_bits, cfg_.wired_base_s,
                          cfg_.backhaul_bps) +
         mec_exec_latency(remainder, task.cycles, mec_dt) + mec_queue_est_ +
         dl_tx_est_[m];
}

SplitResult SlotGame::refine_split(int m, int k, SplitChoice init) const {
  const TaskSpec& task = tasks_[m];
  const double g_t = cfg_.utility_latency_weight;
  const double bound = task.latency_bound_s;
  const double cn_rate =
      cfg_.inc_rates_hz[k - 1] * (1.0 - cfg_.dt_discrepancy);
  const double mec_rate = cfg_.mec_rate_hz * (1.0 - cfg_.dt_discrepancy);

  auto latency = [&](const SplitChoice& s) { return collab_total_s(m, k, s); };
  auto gain = [&](const SplitChoice& s) {
    return g_t * (direct_total_[m] - latency(s));
  };

  SplitResult best;
  best.split = init;
  best.latency_s = latency(init);
  best.score = gain(init);
  best.feasible = best.latency_s <= bound + 1e-12;
  bool have_best = best.feasible;

  SplitChoice cur = init;
  double theta = 0.0;  // latency-bound multiplier
  double nu = 0.0;     // share-cap multiplier
  int it = 0;
  double residual = 0.0;
  for (; it < cfg_.split_max_iters; ++it) {
    const double t_cur = latency(cur);
    // latency partials of the collaborative path
    const double dt_dlambda = task.cycles / (cur.inc_share * cn_rate) -
                              task.cycles / mec_rate -
                              task.input_bits / cfg_.backhaul_bps;
    const double dt_dbeta = -cur.inc_fraction * task.cycles /
                            (cur.inc_share * cur.inc_share * cn_rate);
    const double dl_dlambda = -(g_t + theta) * dt_dlambda;
    const double dl_dbeta = -(g_t + theta) * dt_dbeta - nu;

    // relative step along the normalized ascent direction
    const double norm = std::hypot(dl_dlambda, dl_dbeta);
    SplitChoice next = cur;
    if (norm > 0) {
      next.inc_fraction =
          clamp01(cur.inc_fraction +
                  cfg_.step_inc_fraction * dl_dlambda / norm);
      next.inc_share = std::clamp(
          cur.inc_share + cfg_.step_inc_share * dl_dbeta / norm, 1e-6, 1.0);
    }
    theta = std::max(0.0, theta + cfg_.step_latency_mult *
                                      (t_cur - bound) / bound);
    nu = std::max(0.0, nu + cfg_.step_share_mult * (cur.inc_share - 1.0));

    residual = std::hypot(next.inc_fraction - cur.inc_fraction,
                          next.inc_share - cur.inc_share);
    cur = next;
    const double t_next = latency(cur);
    if (t_next <= bound + 1e-12) {
      const double s_next = gain(cur);
      if (!have_best || s_next > best.score) {
        best.split = cur;
        best.score = s_next;
        best.latency_s = t_next;
        best.feasible = true;
        have_best = true;
      }
    }
    if (residual < cfg_.split_tolerance) break;
  }
  best.converged = residual < cfg_.split_tolerance;
  best.residual = residual;
  best.iterations = std::min(it + 1, cfg_.split_max_iters);
  if (!have_best) {
    // nothing met the bound: report the last iterate, flagged infeasible
    best.split = cur;
    best.latency_s = latency(cur);
    best.score = gain(cur);
    best.feasible = false;
  }
  return best;
}

double SlotGame::score(int m, int k) const {
  if (k == 0 || !in_game(m)) return 0.0;
  return table_[m][k - 1].score;
}

double SlotGame::utility(int m, const StrategyProfile& p) const {
  if (!active_[m]) return 0.0;
  return score(m, p.channel[m]) -
         cfg_.utility_energy_weight * dl_energy_est_[m];
}

const SplitResult& SlotGame::split_result(int m, int k) const {
  return table_[m][k - 1];
}

std::vector<int> SlotGame::feasible_channels(int m,
                                             const StrategyProfile& p) const {
  std::vector<int> out;
  if (!in_game(m)) return out;
  std::vector<int> others(k_count_, 0);
  for (int n = 0; n < m_count_; ++n) {
    if (n != m && active_[n] && p.channel[n] > 0) others[p.channel[n] - 1]++;
  }
  for (int k = 1; k <= k_count_; ++k) {
    if (table_[m][k - 1].feasible && others[k - 1] < cfg_.inc_assoc_capacity) {
      out.push_back(k);
    }
  }
  return out;
}

int SlotGame::best_response(int m, const StrategyProfile& p) const {
  if (!in_game(m)) return 0;
  int best = 0;
  double best_score = 0.0;  // the direct path's score
  for (int k : feasible_channels(m, p)) {
    if (score(m, k) > best_score) {
      best = k;
      best_score = score(m, k);
    }
  }
  return best;
}

double SlotGame::potential(const StrategyProfile& p) const {
  // Sum of the occupants' gains; each direct user contributes its (zero)
  // reference score, matching the exact-potential construction.
  double phi = 0.0;
  for (int m = 0; m < m_count_; ++m) {
    if (p.channel[m] == 0) {
      phi += score(m, 0);
    } else {
      phi += score(m, p.channel[m]);
      for (int n = 0; n < m_count_; ++n) {
        if (n != m) phi += score(n, 0);
      }
    }
  }
  return phi;
}

DynamicsResult SlotGame::run_dynamics(int max_rounds) const {
  return run_dynamics(StrategyProfile::all_direct(m_count_), max_rounds);
}

DynamicsResult SlotGame::run_dynamics(StrategyProfile start,
                                      int max_rounds) const {
  DynamicsResult res;
  res.profile = std::move(start);
  for (int m = 0; m < m_count_; ++m) {
    if (!in_game(m)) res.profile.channel[m] = 0;  // coupling constraint
  }
  for (int round = 0; round < max_rounds; ++round) {
    bool changed = false;
    for (int m = 0; m < m_count_; ++m) {
      if (!in_game(m)) continue;
      const int reply = best_response(m, res.profile);
      if (reply != res.profile.channel[m]) {
        res.profile.channel[m] = reply;
        res.profile.split[m] =
            reply > 0 ? table_[m][reply - 1].split : SplitChoice{};
        res.moves++;
        changed = true;
      }
    }
    res.rounds = round + 1;
    if (!changed) {
      res.converged = true;
      break;
    }
  }
  // closing sweep: no user may hold a feasible improving deviation
  res.equilibrium = res.converged;
  if (res.converged) {
    for (int m = 0; m < m_count_ && res.equilibrium; ++m) {
      if (!in_game(m)) continue;
      const double own = score(m, res.profile.channel[m]);
      if (0.0 > own + 1e-12) res.equilibrium = false;
      for (int k : feasible_channels(m, res.profile)) {
        if (score(m, k) > own + 1e-12) {
          res.equilibrium = false;
          break;
        }
      }
    }
  }
  return res;
}

InterferenceTolerance SlotGame::interference_tolerance(int m, int k) const {
  InterferenceTolerance tol;
  if (!in_game(m) || ul_rate_est_[m] <= 0) return tol;
  const SplitResult& sr = table_[m][k - 1];
  const TaskSpec& task = tasks_[m];
  const double ul_now = task.input_bits / ul_rate_est_[m];
  tol.budget_s = task.latency_bound_s - (sr.latency_s - ul_now);
  if (tol.budget_s <= 0) return tol;
  tol.rate_needed_bps = task.input_bits / tol.budget_s;

  // invert the rate on its increasing branch
  double lo = 0.0, hi = 1e15;
  if (urllc_rate(hi, cfg_.bandwidth_hz, cfg_.blocklength,
                 cfg_.decoding_error) < tol.rate_needed_bps) {
    return tol;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (urllc_rate(mid, cfg_.bandwidth_hz, cfg_.blocklength,
                   cfg_.decoding_error) >= tol.rate_needed_bps) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  tol.sinr_needed = hi;
  if (tol.sinr_needed <= 0) {
    // any interference level keeps the bound; report the solo headroom
    tol.tolerance_w = std::numeric_limits<double>::infinity();
    tol.attainable = true;
    return tol;
  }
  const double noise = noise_power_w(cfg_);
  const double received_w = ul_sinr_est_[m] * noise;  // solo received power
  tol.tolerance_w = std::max(0.0, received_w / tol.sinr_needed - noise);
  tol.attainable = true;
  return tol;
}

void SlotGame::freeze_splits(
    const std::vector<std::vector<SplitChoice>>& splits) {
  for (int m = 0; m < m_count_; ++m) {
    if (!in_game(m)) continue;
    for (int k = 1; k <= k_count_; ++k) {
      SplitResult& sr = table_[m][k - 1];
      sr.split = splits[m][k - 1];
      sr.latency_s = collab_total_s(m, k, sr.split);
      sr.score = cfg_.utility_latency_weight *
                 (direct_total_[m] - sr.latency_s);
      sr.feasible = sr.latency_s <= tasks_[m].latency_bound_s + 1e-12;
    }
  }
}

}  // namespace ince
