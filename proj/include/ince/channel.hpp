#pragma once

#include <array>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "ince/config.hpp"
#include "ince/rng.hpp"

namespace ince {

struct ChannelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One slot's channel state: user positions, large-scale gains toward the AP
// and small-scale fading vectors (one length-L column per user, drawn
// independently for the uplink and downlink stages).
struct ChannelRealization {
  std::array<double, 2> ap_position{};
  std::vector<std::array<double, 2>> positions;
  std::vector<double> gain;  // linear large-scale coefficient g[m]
  std::vector<std::vector<std::complex<double>>> fading_ul;
  std::vector<std::vector<std::complex<double>>> fading_dl;

  int num_users() const { return static_cast<int>(gain.size()); }
};

struct LinkBudget {
  double sinr = 0.0;        // linear ratio
  double rate_bps = 0.0;
  double dispersion = 0.0;  // in [0, 1)
};

// log-distance path loss in dB; the linear gain is 10^(PL/10).
double path_loss_db(double distance_m);

// Thermal noise power over the system bandwidth, in watts.
double noise_power_w(const ScenarioConfig& cfg);

// Positions uniform in the square (AP at the center, distances clamped to
// >= 1 m), fading entries standard complex Gaussian.
ChannelRealization draw_realization(const ScenarioConfig& cfg, RngStream& rng);

// Match-filter SINR of `user` given each user's selected channel (negative =
// not transmitting). Interference comes only from co-channel transmitters.
double uplink_sinr(int user, std::span<const int> channel_of,
                   std::span<const double> tx_power_w,
                   const ChannelRealization& ch, double noise_w);

// Interference-free downlink SINR at `user` for transmit power p_dl.
double downlink_sinr(int user, double p_dl_w, const ChannelRealization& ch,
                     double noise_w);

// Inverse of the Gaussian tail function Q; domain (0, 1).
double inverse_q(double eps);

// Finite-blocklength achievable rate: Shannon term minus the dispersion
// penalty, clamped at zero when the penalty dominates.
double urllc_rate(double sinr, double bandwidth_hz, int blocklength,
                  double decoding_error);

double channel_dispersion(double sinr);

// Parallel transmission of task fractions: slowest destination dominates.
// A used destination with zero rate is an infeasible link.
double uplink_latency(std::span<const double> fractions, double input_bits,
                      std::span<const double> rates_bps);

// Rendered size is proportional to the input size.
double render_size(double input_bits, double slope);

double downlink_latency(double rendered_bits, double dl_rate_bps);

// Power-times-rate energy proxy summed over users.
double downlink_energy(std::span<const double> dl_power_w,
                       std::span<const double> dl_rates_bps);

}  // namespace ince
