#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "ince/config.hpp"

namespace ince {

struct ComputeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Digital-twin view of a processing rate: the twin reports `rate_hz`, the
// physical node delivers rate_hz - discrepancy_hz.
struct DtEstimate {
  double rate_hz = 0.0;
  double discrepancy_hz = 0.0;

  static DtEstimate from_fraction(double rate_hz, double fraction) {
    return {rate_hz, fraction * rate_hz};
  }
  double actual_rate_hz() const { return rate_hz - discrepancy_hz; }
};

// Estimated execution time plus the twin-discrepancy gap; collapses to the
// closed form fraction*cycles/(f - f~).
double mec_exec_latency(double fraction, double cycles, const DtEstimate& dt);

// Same structure at an INC node whose granted compute share scales the rate.
double cn_exec_latency(double fraction, double cycles, const DtEstimate& dt,
                       double share);

// Work already enqueued at a node this slot, expressed as waiting time.
double queue_delay(double enqueued_cycles, double node_rate_hz);

// Fixed wired hop plus the forwarded payload over the backhaul.
double forwarding_delay(double forwarded_bits, double wired_base_s,
                        double backhaul_bps);

struct LatencyBreakdown {
  double ul_tx = 0.0;
  double cn_exec = 0.0;
  double cn_queue = 0.0;
  double forward = 0.0;
  double mec_exec = 0.0;
  double mec_queue = 0.0;
  double dl_tx = 0.0;
  double total = 0.0;
  bool collaborative = false;
  bool link_infeasible = false;
  bool bound_violated = false;
};

// Sums the mode-appropriate components into `total`.
void finalize_total(LatencyBreakdown& b);

// g_t * (reference - actual latency) - w_m * own downlink energy
double user_utility(double reference_total_s, double total_s,
                    double dl_energy, const ScenarioConfig& cfg);

// Instantaneous network cost: sum of end-to-end latencies and energies.
double operator_cost(std::span<const double> totals_s,
                     std::span<const double> energies);

// Reference-over-evaluated cost ratio; > 1 means the evaluated policy is
// cheaper.
double performance_gain(double cost_ref, double cost_alg);

// Weighted latency/energy cost gain between two measurements of the same
// workload. Weights are normalized so a policy measured against itself
// scores exactly 1.
double cost_gain(double latency_ref_s, double energy_ref, double latency_alg_s,
                 double energy_alg, const ScenarioConfig& cfg);

}  // namespace ince
