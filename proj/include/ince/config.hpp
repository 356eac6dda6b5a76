#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ince {

// Markov request chain parameters (idle state 0 plus tasks 1..num_tasks).
struct RequestParams {
  double no_request_prob = 0.1;  // R
  double zipf_exponent = 0.7;
  int neighborhood = 3;  // neighbor tasks reachable from an active state
  int num_tasks = 30;    // F
};

// Full parameterization of one experiment. Immutable after load; every other
// module reads from it. Units are SI (bits, cycles, seconds, watts, Hz); the
// on-disk schema uses the human-friendly units documented in the README.
struct ScenarioConfig {
  // topology
  int num_users = 6;     // M
  int num_inc = 4;       // K
  int num_antennas = 4;  // L
  double area_side_m = 200.0;

  // radio
  double bandwidth_hz = 10e6;
  double noise_psd_dbm_hz = -174.0;
  int blocklength = 256;        // finite-blocklength symbols
  double decoding_error = 1e-9;
  double ul_power_w = 0.2;      // fixed per-user uplink transmit power
  double dl_power_min_w = 0.0;
  double dl_power_max_w = 20.0;

  // compute
  double mec_rate_hz = 30e9;
  std::vector<double> inc_rates_hz;  // per node; default spans [1, 9] GHz
  int inc_assoc_capacity = 5;        // users per INC node
  int ofmo_capacity = 6;             // C_max, defaults to min(M, K * capacity)
  double dt_discrepancy = 0.3;       // rate deviation fraction, f~ = delta * f

  // tasks
  std::string task_class = "default";  // default | data-intensive | compute-intensive
  double task_size_lo_bits = 1e6;
  double task_size_hi_bits = 5e6;
  double task_cycles_lo = 1e6;
  double task_cycles_hi = 5e6;
  double latency_bound_lo_s = 5e-3;
  double latency_bound_hi_s = 15e-3;
  double render_slope_lo = 1.0;  // rendered size = slope * input size
  double render_slope_hi = 10.0;
  RequestParams request;

  // utility / cost weights
  double utility_latency_weight = 1.0;  // g_t
  double utility_energy_weight = 0.5;   // w_m
  double cost_latency_weight = 0.5;     // w_l
  double cost_energy_weight = 0.5;      // w_e
  double utility_scale = 1.0;           // global-reward normalizer

  // queueing / forwarding plumbing
  double wired_base_s = 1e-3;
  double backhaul_bps = 1e9;

  // task-split refinement (projected primal-dual)
  double step_inc_fraction = 0.01;  // kappa1
  double step_inc_share = 0.01;     // kappa2
  double step_latency_mult = 0.01;  // kappa3
  double step_share_mult = 0.01;    // kappa4
  int split_max_iters = 500;
  double split_tolerance = 1e-6;
  int game_max_rounds = 64;

  // learning
  double discount = 0.9;  // gamma
  double gae_lambda = 0.95;
  double critic_weight_ul = 0.25;
  double critic_weight_dl = 0.25;
  double critic_weight_gl = 0.5;
  double clip_ratio = 0.2;
  int ppo_epochs = 4;
  int minibatch = 32;
  double learning_rate = 3e-4;
  double momentum = 0.9;
  int hidden = 64;
  int episode_slots = 200;
  int replay_capacity = 10000;
  int target_refresh_windows = 10;
  bool normalize_advantages = true;
  double logstd_init = -0.7;

  // downlink energy proxy: "rate" = power * dl rate, "latency" = power * dl time
  std::string energy_model = "rate";

  std::uint64_t seed = 1;

  // Fills inc_rates_hz / ofmo_capacity defaults that depend on other fields
  // and applies task-class presets.
  void finalize_defaults();
};

struct ConfigViolation {
  std::string field;
  std::string message;
};

// Empty list iff all invariants hold.
std::vector<ConfigViolation> validate_config(const ScenarioConfig& cfg);

// Parses the JSON config file; missing keys fall back to defaults, unknown
// keys are reported as errors. Throws ConfigError with the offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config(const std::string& text);
std::string serialize_config(const ScenarioConfig& cfg);

// Stable hash of the canonical serialized form.
std::uint64_t config_hash(const ScenarioConfig& cfg);

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b);
bool operator==(const RequestParams& a, const RequestParams& b);

}  // namespace ince
