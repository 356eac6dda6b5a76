#include "ince/compute.hpp"

#include <algorithm>

namespace ince {

double mec_exec_latency(double fraction, double cycles, const DtEstimate& dt) {
  if (fraction < 0 || fraction > 1) {
    throw ComputeError("mec_exec_latency: fraction outside [0, 1]");
  }
  if (dt.discrepancy_hz < 0 || dt.discrepancy_hz >= dt.rate_hz) {
    throw ComputeError("mec_exec_latency: invalid twin estimate");
  }
  if (fraction == 0) return 0.0;
  const double estimated = fraction * cycles / dt.rate_hz;
  const double gap = fraction * cycles * dt.discrepancy_hz /
                     (dt.rate_hz * (dt.rate_hz - dt.discrepancy_hz));
  return estimated + gap;
}

double cn_exec_latency(double fraction, double cycles, const DtEstimate& dt,
                       double share) {
  if (fraction < 0 || fraction > 1) {
    throw ComputeError("cn_exec_latency: fraction outside [0, 1]");
  }
  if (fraction == 0) return 0.0;
  if (share <= 0 || share > 1) {
    throw ComputeError("cn_exec_latency: positive fraction with no share");
  }
  DtEstimate scaled{share * dt.rate_hz, share * dt.discrepancy_hz};
  return mec_exec_latency(fraction, cycles, scaled);
}

double queue_delay(double enqueued_cycles, double node_rate_hz) {
  if (enqueued_cycles < 0) throw ComputeError("queue_delay: negative load");
  if (node_rate_hz <= 0) throw ComputeError("queue_delay: nonpositive rate");
  return enqueued_cycles / node_rate_hz;
}

double forwarding_delay(double forwarded_bits, double wired_base_s,
                        double backhaul_bps) {
  if (forwarded_bits < 0) throw ComputeError("forwarding_delay: negative size");
  if (backhaul_bps <= 0) {
    throw ComputeError("forwarding_delay: nonpositive backhaul rate");
  }
  return wired_base_s + forwarded_bits / backhaul_bps;
}

void finalize_total(LatencyBreakdown& b) {
  b.total = b.ul_tx + b.mec_exec + b.mec_queue + b.dl_tx;
  if (b.collaborative) {
    b.total += b.cn_exec + b.cn_queue + b.forward;
  }
}

double user_utility(double reference_total_s, double total_s, double dl_energy,
                    const ScenarioConfig& cfg) {
  return cfg.utility_latency_weight * (reference_total_s - total_s) -
         cfg.utility_energy_weight * dl_energy;
}

double operator_cost(std::span<const double> totals_s,
                     std::span<const double> energies) {
  if (totals_s.size() != energies.size()) {
    throw ComputeError("operator_cost: size mismatch");
  }
  double c = 0.0;
  for (size_t m = 0; m < totals_s.size(); ++m) c += totals_s[m] + energies[m];
  return c;
}

double performance_gain(double cost_ref, double cost_alg) {
  if (cost_ref <= 0 || cost_alg <= 0) {
    throw ComputeError("performance_gain: costs must be positive");
  }
  return cost_ref / cost_alg;
}

double cost_gain(double latency_ref_s, double energy_ref, double latency_alg_s,
                 double energy_alg, const ScenarioConfig& cfg) {
  const double wsum = cfg.cost_latency_weight + cfg.cost_energy_weight;
  const double wl = cfg.cost_latency_weight / wsum;
  const double we = cfg.cost_energy_weight / wsum;
  double gain = 0.0;
  gain += wl * performance_gain(latency_ref_s, latency_alg_s);
  if (we > 0) {
    // zero energies (idle downlink) are floored so the ratio stays finite
    const double floor_e = 1e-12;
    gain += we * performance_gain(std::max(energy_ref, floor_e),
                                  std::max(energy_alg, floor_e));
  }
  return gain;
}

}  // namespace ince
