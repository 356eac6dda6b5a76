#include "ince/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ince {

double path_loss_db(double distance_m) {
  if (distance_m <= 0) {
    throw ChannelError("path_loss_db: distance must be positive");
  }
  return -35.3 - 37.6 * std::log10(distance_m);
}

double noise_power_w(const ScenarioConfig& cfg) {
  // dBm/Hz -> W/Hz, then integrate over the bandwidth
  const double psd_w_hz = std::pow(10.0, (cfg.noise_psd_dbm_hz - 30.0) / 10.0);
  return psd_w_hz * cfg.bandwidth_hz;
}

ChannelRealization draw_realization(const ScenarioConfig& cfg,
                                    RngStream& rng) {
  ChannelRealization ch;
  const int m_count = cfg.num_users;
  const int l_count = cfg.num_antennas;
  ch.ap_position = {cfg.area_side_m / 2.0, cfg.area_side_m / 2.0};
  ch.positions.resize(m_count);
  ch.gain.resize(m_count);
  ch.fading_ul.resize(m_count);
  ch.fading_dl.resize(m_count);
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  for (int m = 0; m < m_count; ++m) {
    ch.positions[m] = {rng.uniform(0.0, cfg.area_side_m),
                       rng.uniform(0.0, cfg.area_side_m)};
    const double dx = ch.positions[m][0] - ch.ap_position[0];
    const double dy = ch.positions[m][1] - ch.ap_position[1];
    const double d = std::max(1.0, std::hypot(dx, dy));  // sub-meter clamp
    ch.gain[m] = std::pow(10.0, path_loss_db(d) / 10.0);
    ch.fading_ul[m].resize(l_count);
    ch.fading_dl[m].resize(l_count);
    for (int l = 0; l < l_count; ++l) {
      ch.fading_ul[m][l] = {rng.normal() * inv_sqrt2, rng.normal() * inv_sqrt2};
    }
    for (int l = 0; l < l_count; ++l) {
      ch.fading_dl[m][l] = {rng.normal() * inv_sqrt2, rng.normal() * inv_sqrt2};
    }
  }
  return ch;
}

namespace {

double combined_norm_sq(const ChannelRealization& ch, int m) {
  double s = 0.0;
  for (const auto& h : ch.fading_ul[m]) s += std::norm(h);
  return ch.gain[m] * s;
}

std::complex<double> combined_dot(const ChannelRealization& ch, int m, int n) {
  // <h_m, h_n> with h = sqrt(g) * fading
  std::complex<double> s{0.0, 0.0};
  const auto& hm = ch.fading_ul[m];
  const auto& hn = ch.fading_ul[n];
  for (size_t l = 0; l < hm.size(); ++l) s += std::conj(hm[l]) * hn[l];
  return std::sqrt(ch.gain[m] * ch.gain[n]) * s;
}

}  // namespace

double uplink_sinr(int user, std::span<const int> channel_of,
                   std::span<const double> tx_power_w,
                   const ChannelRealization& ch, double noise_w) {
  if (noise_w <= 0) throw ChannelError("uplink_sinr: noise must be positive");
  if (user < 0 || user >= ch.num_users() ||
      user >= static_cast<int>(channel_of.size())) {
    throw ChannelError("uplink_sinr: bad user index");
  }
  if (channel_of[user] < 0) {
    throw ChannelError("uplink_sinr: user has no assigned channel");
  }
  const double own = combined_norm_sq(ch, user);
  double interference = 0.0;
  for (int n = 0; n < static_cast<int>(channel_of.size()); ++n) {
    if (n == user || channel_of[n] != channel_of[user] || channel_of[n] < 0) {
      continue;
    }
    // match-filter residual of a co-channel transmitter
    interference +=
        tx_power_w[n] * std::norm(combined_dot(ch, user, n)) / own;
  }
  return tx_power_w[user] * own / (interference + noise_w);
}

double downlink_sinr(int user, double p_dl_w, const ChannelRealization& ch,
                     double noise_w) {
  if (noise_w <= 0) throw ChannelError("downlink_sinr: noise must be positive");
  double s = 0.0;
  for (const auto& h : ch.fading_dl[user]) s += std::norm(h);
  return p_dl_w * ch.gain[user] * s / noise_w;
}

double inverse_q(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw std::domain_error("inverse_q: argument must lie in (0, 1)");
  }
  if (eps > 0.5) return -inverse_q(1.0 - eps);
  // Acklam-style initial guess for the normal quantile in the lower tail,
  // then Newton steps on Q(x) - eps with Q(x) = erfc(x / sqrt(2)) / 2.
  const double t = std::sqrt(-2.0 * std::log(eps));
  double x = t - (2.515517 + 0.802853 * t + 0.010328 * t * t) /
                     (1.0 + 1.432788 * t + 0.189269 * t * t +
                      0.001308 * t * t * t);
  for (int it = 0; it < 4; ++it) {
    const double q = 0.5 * std::erfc(x / std::numbers::sqrt2);
    const double pdf =
        std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    if (pdf <= 0) break;
    x += (q - eps) / pdf;
  }
  return x;
}

double channel_dispersion(double sinr) {
  const double a = 1.0 + sinr;
  return 1.0 - 1.0 / (a * a);
}

double urllc_rate(double sinr, double bandwidth_hz, int blocklength,
                  double decoding_error) {
  if (sinr < 0) throw ChannelError("urllc_rate: negative SINR");
  if (sinr == 0) return 0.0;
  const double shannon = bandwidth_hz * std::log2(1.0 + sinr);
  const double v = channel_dispersion(sinr);
  const double penalty = bandwidth_hz * std::sqrt(v / blocklength) *
                         inverse_q(decoding_error) / std::numbers::ln2;
  return std::max(0.0, shannon - penalty);
}

double uplink_latency(std::span<const double> fractions, double input_bits,
                      std::span<const double> rates_bps) {
  if (fractions.size() != rates_bps.size()) {
    throw ChannelError("uplink_latency: fraction/rate size mismatch");
  }
  double worst = 0.0;
  for (size_t i = 0; i < fractions.size(); ++i) {
    if (fractions[i] <= 0) continue;
    if (rates_bps[i] <= 0) {
      throw ChannelError("uplink_latency: used destination has zero rate");
    }
    worst = std::max(worst, fractions[i] * input_bits / rates_bps[i]);
  }
  return worst;
}

double render_size(double input_bits, double slope) {
  return slope * input_bits;
}

double downlink_latency(double rendered_bits, double dl_rate_bps) {
  if (dl_rate_bps <= 0) {
    throw ChannelError("downlink_latency: zero downlink rate");
  }
  return rendered_bits / dl_rate_bps;
}

double downlink_energy(std::span<const double> dl_power_w,
                       std::span<const double> dl_rates_bps) {
  if (dl_power_w.size() != dl_rates_bps.size()) {
    throw ChannelError("downlink_energy: power/rate size mismatch");
  }
  double e = 0.0;
  for (size_t m = 0; m < dl_power_w.size(); ++m) {
    e += dl_power_w[m] * dl_rates_bps[m];
  }
  return e;
}

}  // namespace ince
