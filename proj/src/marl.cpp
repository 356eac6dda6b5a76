#include "ince/marl.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "ince/ofmo.hpp"

namespace ince {

CriticVariant parse_variant(const std::string& name) {
  if (name == "ahmrl") return CriticVariant::AHMRL;
  if (name == "masc") return CriticVariant::MASC;
  if (name == "ac") return CriticVariant::AC;
  throw std::invalid_argument("unknown critic variant: " + name);
}

std::string variant_name(CriticVariant v) {
  switch (v) {
    case CriticVariant::AHMRL: return "ahmrl";
    case CriticVariant::MASC: return "masc";
    case CriticVariant::AC: return "ac";
  }
  return "?";
}

std::vector<double> ul_features(const ScenarioConfig& cfg,
                                std::span<const int> requests,
                                std::span<const TaskSpec> tasks,
                                std::span<const std::uint8_t> active) {
  std::vector<double> x(cfg.num_users * kUlFeatures, 0.0);
  for (int m = 0; m < cfg.num_users; ++m) {
    double* f = &x[m * kUlFeatures];
    if (active[m]) {
      f[0] = static_cast<double>(requests[m]) / cfg.request.num_tasks;
      f[1] = tasks[m].input_bits / cfg.task_size_hi_bits;
    }
    f[2] = cfg.ul_power_w;
  }
  return x;
}

std::vector<double> dl_features(const ScenarioConfig& cfg,
                                std::span<const std::uint8_t> ofmo,
                                std::span<const TaskSpec> tasks,
                                std::span<const std::uint8_t> active) {
  std::vector<double> x(cfg.num_users * kDlFeatures, 0.0);
  const double rendered_scale = cfg.render_slope_hi * cfg.task_size_hi_bits;
  for (int m = 0; m < cfg.num_users; ++m) {
    double* f = &x[m * kDlFeatures];
    f[0] = ofmo[m] ? 1.0 : 0.0;
    if (active[m]) {
      f[1] = tasks[m].rendered_bits() / rendered_scale;
      f[2] = tasks[m].input_bits / cfg.task_size_hi_bits;
    }
  }
  return x;
}

int ul_reward(std::span<const int> inc_loads, int capacity) {
  int lo = inc_loads.empty() ? 0 : inc_loads[0];
  int hi = lo;
  for (int load : inc_loads) {
    lo = std::min(lo, load);
    hi = std::max(hi, load);
    if (load > capacity) return -1;
  }
  return (hi - lo <= 1) ? 1 : 0;
}

double dl_reward(std::span<const double> dl_power_w,
                 const ScenarioConfig& cfg) {
  if (dl_power_w.empty()) return 0.0;
  const double span = cfg.dl_power_max_w - cfg.dl_power_min_w;
  double acc = 0.0;
  for (double p : dl_power_w) acc += (p - cfg.dl_power_min_w) / span;
  return -0.5 * acc / static_cast<double>(dl_power_w.size());
}

double gl_reward(std::span<const double> utilities,
                 const ScenarioConfig& cfg) {
  const double total = std::accumulate(utilities.begin(), utilities.end(), 0.0);
  return -1.0 + total / (cfg.num_users * cfg.utility_scale);
}

std::vector<double> gae(std::span<const double> rewards,
                        std::span<const double> values, double gamma,
                        double lambda, double terminal_value) {
  if (rewards.size() != values.size()) {
    throw NumericError("gae: reward/value length mismatch");
  }
  const int t_count = static_cast<int>(rewards.size());
  std::vector<double> adv(t_count, 0.0);
  double running = 0.0;
  for (int t = t_count - 1; t >= 0; --t) {
    const double next_v = (t + 1 < t_count) ? values[t + 1] : terminal_value;
    const double delta = rewards[t] + gamma * next_v - values[t];
    running = delta + gamma * lambda * running;
    adv[t] = running;
  }
  return adv;
}

EffectiveAdvantages effective_advantages(
    CriticVariant variant, const std::optional<std::vector<double>>& a_ul,
    const std::optional<std::vector<double>>& a_dl,
    const std::optional<std::vector<double>>& a_gl) {
  auto need = [](const std::optional<std::vector<double>>& a,
                 const char* what) -> const std::vector<double>& {
    if (!a) throw NumericError(std::string("effective_advantages: missing ") +
                               what + " stream for this critic variant");
    return *a;
  };
  EffectiveAdvantages out;
  switch (variant) {
    case CriticVariant::AHMRL: {
      const auto& u = need(a_ul, "uplink");
      const auto& d = need(a_dl, "downlink");
      const auto& g = need(a_gl, "global");
      out.ul.resize(u.size());
      out.dl.resize(d.size());
      for (size_t t = 0; t < u.size(); ++t) out.ul[t] = u[t] + g[t];
      for (size_t t = 0; t < d.size(); ++t) out.dl[t] = d[t] + g[t];
      break;
    }
    case CriticVariant::MASC: {
      const auto& g = need(a_gl, "global");
      out.ul = g;
      out.dl = g;
      break;
    }
    case CriticVariant::AC: {
      out.ul = need(a_ul, "uplink");
      out.dl = need(a_dl, "downlink");
      break;
    }
  }
  return out;
}

PolicyNet PolicyNet::make(const ScenarioConfig& cfg, CriticVariant variant,
                          RngStream& init_rng) {
  PolicyNet net;
  net.variant = variant;
  net.num_users = cfg.num_users;
  net.hidden = cfg.hidden;
  net.dl_logstd = std::clamp(cfg.logstd_init, kLogStdMin, kLogStdMax);
  const int h = cfg.hidden;
  net.ul_enc = Mlp::make({kUlFeatures, h, h}, init_rng);
  net.ul_enc.tanh_output = true;
  net.ul_head = Mlp::make({2 * h, h, h, 1}, init_rng);
  net.dl_enc = Mlp::make({kDlFeatures, h, h}, init_rng);
  net.dl_enc.tanh_output = true;
  net.dl_head = Mlp::make({2 * h, h, h, 1}, init_rng);
  if (net.has_local_critics()) {
    net.v_ul = Mlp::make({h, h, h, 1}, init_rng);
    net.v_dl = Mlp::make({h, h, h, 1}, init_rng);
  }
  if (net.has_global_critic()) {
    net.v_gl = Mlp::make({2 * h, h, h, 1}, init_rng);
  }
  return net;
}

StageForward stage_forward(const Mlp& enc, const Mlp& head,
                           std::span<const double> features, int num_users) {
  const int f_dim = enc.in_dim();
  StageForward fw;
  fw.enc_caches.resize(num_users);
  fw.enc.resize(num_users);
  fw.head_caches.resize(num_users);
  fw.raw.resize(num_users);
  fw.pooled.assign(enc.out_dim(), 0.0);
  for (int m = 0; m < num_users; ++m) {
    fw.enc[m] = mlp_forward(enc, features.subspan(m * f_dim, f_dim),
                            &fw.enc_caches[m]);
    for (int i = 0; i < enc.out_dim(); ++i) fw.pooled[i] += fw.enc[m][i];
  }
  for (double& v : fw.pooled) v /= num_users;
  std::vector<double> cat(2 * enc.out_dim());
  for (int m = 0; m < num_users; ++m) {
    std::copy(fw.enc[m].begin(), fw.enc[m].end(), cat.begin());
    std::copy(fw.pooled.begin(), fw.pooled.end(),
              cat.begin() + enc.out_dim());
    fw.raw[m] = mlp_forward(head, cat, &fw.head_caches[m])[0];
  }
  return fw;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::vector<double> ul_actor_scores(const PolicyNet& net,
                                    std::span<const double> xu) {
  StageForward fw = stage_forward(net.ul_enc, net.ul_head, xu, net.num_users);
  std::vector<double> scores(net.num_users);
  for (int m = 0; m < net.num_users; ++m) scores[m] = std::tanh(fw.raw[m]);
  return scores;
}

DlSample dl_actor_sample(const PolicyNet& net, std::span<const double> xd,
                         const ScenarioConfig& cfg, RngStream& rng) {
  StageForward fw = stage_forward(net.dl_enc, net.dl_head, xd, net.num_users);
  DlSample s;
  s.mean.resize(net.num_users);
  s.action_pre.resize(net.num_users);
  s.power_w.resize(net.num_users);
  const double sd = std::exp(std::clamp(net.dl_logstd, kLogStdMin, kLogStdMax));
  for (int m = 0; m < net.num_users; ++m) {
    s.mean[m] = sigmoid(fw.raw[m]);
    s.action_pre[m] = s.mean[m] + sd * rng.normal();
    const double clipped = std::clamp(s.action_pre[m], 0.0, 1.0);
    s.power_w[m] =
        cfg.dl_power_min_w + clipped * (cfg.dl_power_max_w - cfg.dl_power_min_w);
  }
  s.logp = dl_logp(s.mean, net.dl_logstd, s.action_pre);
  return s;
}

double ul_logp(std::span<const double> scores,
               std::span<const std::uint8_t> picks) {
  // independent Bernoulli surrogate over sigmoid-squashed scores
  double lp = 0.0;
  for (size_t m = 0; m < scores.size(); ++m) {
    const double p = sigmoid(scores[m]);
    lp += picks[m] ? std::log(p) : std::log(1.0 - p);
  }
  return lp;
}

double dl_logp(std::span<const double> mean, double logstd,
               std::span<const double> action_pre) {
  const double sd = std::exp(std::clamp(logstd, kLogStdMin, kLogStdMax));
  const double log_norm =
      std::log(sd) + 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (size_t m = 0; m < mean.size(); ++m) {
    const double z = (action_pre[m] - mean[m]) / sd;
    lp += -0.5 * z * z - log_norm;
  }
  return lp;
}

StageValues critic_values(const PolicyNet& net, std::span<const double> xu,
                          std::span<const double> xd) {
  StageForward u = stage_forward(net.ul_enc, net.ul_head, xu, net.num_users);
  StageForward d = stage_forward(net.dl_enc, net.dl_head, xd, net.num_users);
  StageValues v;
  if (net.has_local_critics()) {
    v.v_ul = mlp_forward(net.v_ul, u.pooled)[0];
    v.v_dl = mlp_forward(net.v_dl, d.pooled)[0];
  }
  if (net.has_global_critic()) {
    std::vector<double> cat(u.pooled);
    cat.insert(cat.end(), d.pooled.begin(), d.pooled.end());
    v.v_gl = mlp_forward(net.v_gl, cat)[0];
  }
  return v;
}

ActResult act(const PolicyNet& net, const ScenarioConfig& cfg,
              std::span<const int> requests, std::span<const TaskSpec> tasks,
              std::span<const std::uint8_t> active, RngStream& sample_rng) {
  ActResult out;
  out.record.xu = ul_features(cfg, requests, tasks, active);
  out.ul_scores = ul_actor_scores(net, out.record.xu);
  out.record.ofmo = knapsack_ofmo(out.ul_scores, cfg.ofmo_capacity);
  out.record.logp_ul = ul_logp(out.ul_scores, out.record.ofmo);

  out.record.xd = dl_features(cfg, out.record.ofmo, tasks, active);
  DlSample dl = dl_actor_sample(net, out.record.xd, cfg, sample_rng);
  out.record.dl_action_pre = dl.action_pre;
  out.record.logp_dl = dl.logp;

  out.decision.collaborate = out.record.ofmo;
  out.decision.dl_power_w = dl.power_w;
  return out;
}

PolicyOptimizer PolicyOptimizer::make(const PolicyNet& net,
                                      const ScenarioConfig& cfg) {
  PolicyOptimizer opt;
  auto setup = [&](SgdMomentum& s, const Mlp& m) {
    s.learning_rate = cfg.learning_rate;
    s.momentum = cfg.momentum;
    s.init_like(m);
  };
  setup(opt.ul_enc, net.ul_enc);
  setup(opt.dl_enc, net.dl_enc);
  setup(opt.ul_head, net.ul_head);
  setup(opt.dl_head, net.dl_head);
  if (net.has_local_critics()) {
    setup(opt.v_ul, net.v_ul);
    setup(opt.v_dl, net.v_dl);
  }
  if (net.has_global_critic()) setup(opt.v_gl, net.v_gl);
  return opt;
}

namespace {

struct SlotEval {
  StageForward u, d;
  std::vector<double> ul_scores;
  std::vector<double> dl_mu;
  double logp_ul = 0.0;
  double logp_dl = 0.0;
  MlpCache vu_cache, vd_cache, vg_cache;
  double v_u = 0.0, v_d = 0.0, v_g = 0.0;
};

SlotEval forward_slot(const PolicyNet& net, const SlotRecord& rec) {
  SlotEval ev;
  ev.u = stage_forward(net.ul_enc, net.ul_head, rec.xu, net.num_users);
  ev.d = stage_forward(net.dl_enc, net.dl_head, rec.xd, net.num_users);
  ev.ul_scores.resize(net.num_users);
  ev.dl_mu.resize(net.num_users);
  for (int m = 0; m < net.num_users; ++m) {
    ev.ul_scores[m] = std::tanh(ev.u.raw[m]);
    ev.dl_mu[m] = sigmoid(ev.d.raw[m]);
  }
  ev.logp_ul = ul_logp(ev.ul_scores, rec.ofmo);
  ev.logp_dl = dl_logp(ev.dl_mu, net.dl_logstd, rec.dl_action_pre);
  if (net.has_local_critics()) {
    ev.v_u = mlp_forward(net.v_ul, ev.u.pooled, &ev.vu_cache)[0];
    ev.v_d = mlp_forward(net.v_dl, ev.d.pooled, &ev.vd_cache)[0];
  }
  if (net.has_global_critic()) {
    std::vector<double> cat(ev.u.pooled);
    cat.insert(cat.end(), ev.d.pooled.begin(), ev.d.pooled.end());
    ev.v_g = mlp_forward(net.v_gl, cat, &ev.vg_cache)[0];
  }
  return ev;
}

struct PolicyGrads {
  MlpGrads ul_enc, dl_enc, ul_head, dl_head, v_ul, v_dl, v_gl;
  double dl_logstd = 0.0;

  static PolicyGrads zeros_like(const PolicyNet& net) {
    PolicyGrads g;
    g.ul_enc = MlpGrads::zeros_like(net.ul_enc);
    g.dl_enc = MlpGrads::zeros_like(net.dl_enc);
    g.ul_head = MlpGrads::zeros_like(net.ul_head);
    g.dl_head = MlpGrads::zeros_like(net.dl_head);
    if (net.has_local_critics()) {
      g.v_ul = MlpGrads::zeros_like(net.v_ul);
      g.v_dl = MlpGrads::zeros_like(net.v_dl);
    }
    if (net.has_global_critic()) g.v_gl = MlpGrads::zeros_like(net.v_gl);
    return g;
  }

  void scale(double s) {
    ul_enc.scale(s);
    dl_enc.scale(s);
    ul_head.scale(s);
    dl_head.scale(s);
    v_ul.scale(s);
    v_dl.scale(s);
    v_gl.scale(s);
    dl_logstd *= s;
  }

  bool finite() const {
    return ul_enc.finite() && dl_enc.finite() && ul_head.finite() &&
           dl_head.finite() && v_ul.finite() && v_dl.finite() &&
           v_gl.finite() && std::isfinite(dl_logstd);
  }
};

// Backpropagates one slot's scalar sensitivities through heads, critics and
// the shared stage encoders.
void backward_slot(const PolicyNet& net, const SlotRecord& rec,
                   const SlotEval& ev, double dlogp_ul, double dlogp_dl,
                   double dv_u, double dv_d, double dv_g, PolicyGrads& g) {
  const int m_count = net.num_users;
  const int h = net.ul_enc.out_dim();
  const double sd =
      std::exp(std::clamp(net.dl_logstd, kLogStdMin, kLogStdMax));

  std::vector<double> dpool_u(h, 0.0), dpool_d(h, 0.0);
  std::vector<std::vector<double>> denc_u(m_count), denc_d(m_count);

  // actor heads
  for (int m = 0; m < m_count; ++m) {
    const double s = ev.ul_scores[m];
    const double d_score = dlogp_ul * (rec.ofmo[m] - sigmoid(s));
    const double d_raw = d_score * (1.0 - s * s);
    const double din[1] = {d_raw};
    std::vector<double> dcat =
        mlp_backward(net.ul_head, ev.u.head_caches[m], din, g.ul_head);
    denc_u[m].assign(dcat.begin(), dcat.begin() + h);
    for (int i = 0; i < h; ++i) dpool_u[i] += dcat[h + i];
  }
  double dlogstd_acc = 0.0;
  for (int m = 0; m < m_count; ++m) {
    const double mu = ev.dl_mu[m];
    const double z = (rec.dl_action_pre[m] - mu) / sd;
    const double d_mu = dlogp_dl * z / sd;
    dlogstd_acc += dlogp_dl * (z * z - 1.0);
    const double d_raw = d_mu * mu * (1.0 - mu);
    const double din[1] = {d_raw};
    std::vector<double> dcat =
        mlp_backward(net.dl_head, ev.d.head_caches[m], din, g.dl_head);
    denc_d[m].assign(dcat.begin(), dcat.begin() + h);
    for (int i = 0; i < h; ++i) dpool_d[i] += dcat[h + i];
  }
  g.dl_logstd += dlogstd_acc;

  // critic heads feed the pooled latents
  if (net.has_local_critics()) {
    const double du[1] = {dv_u};
    std::vector<double> dp = mlp_backward(net.v_ul, ev.vu_cache, du, g.v_ul);
    for (int i = 0; i < h; ++i) dpool_u[i] += dp[i];
    const double dd[1] = {dv_d};
    dp = mlp_backward(net.v_dl, ev.vd_cache, dd, g.v_dl);
    for (int i = 0; i < h; ++i) dpool_d[i] += dp[i];
  }
  if (net.has_global_critic()) {
    const double dg[1] = {dv_g};
    std::vector<double> dcat =
        mlp_backward(net.v_gl, ev.vg_cache, dg, g.v_gl);
    for (int i = 0; i < h; ++i) {
      dpool_u[i] += dcat[i];
      dpool_d[i] += dcat[h + i];
    }
  }

  // mean pooling spreads the pooled gradient evenly
  std::vector<double> denc(h);
  for (int m = 0; m < m_count; ++m) {
    for (int i = 0; i < h; ++i) {
      denc[i] = denc_u[m][i] + dpool_u[i] / m_count;
    }
    mlp_backward(net.ul_enc, ev.u.enc_caches[m], denc, g.ul_enc);
    for (int i = 0; i < h; ++i) {
      denc[i] = denc_d[m][i] + dpool_d[i] / m_count;
    }
    mlp_backward(net.dl_enc, ev.d.enc_caches[m], denc, g.dl_enc);
  }
}

void normalize_in_place(std::vector<double>& v) {
  if (v.empty()) return;
  double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / v.size());
  for (double& x : v) x = (x - mean) / (sd + 1e-8);
}

struct WindowTargets {
  std::vector<double> a_ul, a_dl, a_gl;      // raw stream advantages
  std::vector<double> y_ul, y_dl, y_gl;      // critic regression targets
  EffectiveAdvantages eff;
};

WindowTargets window_targets(const PolicyNet& target,
                             const TrajectoryBuffer& buffer,
                             const ScenarioConfig& cfg) {
  const int t_count = static_cast<int>(buffer.slots.size());
  std::vector<double> vu(t_count), vd(t_count), vg(t_count);
  std::vector<double> ru(t_count), rd(t_count), rg(t_count);
  for (int t = 0; t < t_count; ++t) {
    const SlotRecord& rec = buffer.slots[t];
    StageValues v = critic_values(target, rec.xu, rec.xd);
    vu[t] = v.v_ul;
    vd[t] = v.v_dl;
    vg[t] = v.v_gl;
    ru[t] = rec.reward_ul;
    rd[t] = rec.reward_dl;
    rg[t] = rec.reward_gl;
  }
  WindowTargets w;
  std::optional<std::vector<double>> a_ul, a_dl, a_gl;
  if (target.has_local_critics()) {
    w.a_ul = gae(ru, vu, cfg.discount, cfg.gae_lambda, 0.0);
    w.a_dl = gae(rd, vd, cfg.discount, cfg.gae_lambda, 0.0);
    a_ul = w.a_ul;
    a_dl = w.a_dl;
    w.y_ul.resize(t_count);
    w.y_dl.resize(t_count);
    for (int t = 0; t < t_count; ++t) {
      w.y_ul[t] = w.a_ul[t] + vu[t];
      w.y_dl[t] = w.a_dl[t] + vd[t];
    }
  }
  if (target.has_global_critic()) {
    w.a_gl = gae(rg, vg, cfg.discount, cfg.gae_lambda, 0.0);
    a_gl = w.a_gl;
    w.y_gl.resize(t_count);
    for (int t = 0; t < t_count; ++t) w.y_gl[t] = w.a_gl[t] + vg[t];
  }
  w.eff = effective_advantages(target.variant, a_ul, a_dl, a_gl);
  if (cfg.normalize_advantages) {
    normalize_in_place(w.eff.ul);
    normalize_in_place(w.eff.dl);
  }
  return w;
}

}  // namespace

double critic_window_loss(const PolicyNet& net, const PolicyNet& target,
                          const TrajectoryBuffer& buffer,
                          const ScenarioConfig& cfg) {
  WindowTargets w = window_targets(target, buffer, cfg);
  double loss = 0.0;
  const int t_count = static_cast<int>(buffer.slots.size());
  for (int t = 0; t < t_count; ++t) {
    const SlotRecord& rec = buffer.slots[t];
    StageValues v = critic_values(net, rec.xu, rec.xd);
    switch (net.variant) {
      case CriticVariant::AHMRL: {
        const double eu = v.v_ul - w.y_ul[t];
        const double ed = v.v_dl - w.y_dl[t];
        const double eg = v.v_gl - w.y_gl[t];
        loss += cfg.critic_weight_ul * eu * eu +
                cfg.critic_weight_dl * ed * ed +
                cfg.critic_weight_gl * eg * eg;
        break;
      }
      case CriticVariant::MASC: {
        const double eg = v.v_gl - w.y_gl[t];
        loss += eg * eg;
        break;
      }
      case CriticVariant::AC: {
        const double eu = v.v_ul - w.y_ul[t];
        const double ed = v.v_dl - w.y_dl[t];
        loss += eu * eu + ed * ed;
        break;
      }
    }
  }
  return t_count > 0 ? loss / t_count : 0.0;
}

SlotLossProbe slot_loss_probe(const PolicyNet& net, const SlotRecord& rec,
                              double adv_ul, double adv_dl, double y_ul,
                              double y_dl, double y_gl,
                              const ScenarioConfig& cfg) {
  SlotEval ev = forward_slot(net, rec);
  PolicyGrads grads = PolicyGrads::zeros_like(net);
  SlotLossProbe probe;

  auto clip_term = [&](double logp_new, double logp_old, double adv,
                       double& dlogp) {
    const double ratio = std::exp(logp_new - logp_old);
    const double clipped =
        std::clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio);
    const double a = ratio * adv;
    const double b = clipped * adv;
    if (a <= b) {
      dlogp = ratio * adv;
      return a;
    }
    dlogp = 0.0;
    return b;
  };
  double dlp_ul = 0.0, dlp_dl = 0.0;
  probe.loss -= clip_term(ev.logp_ul, rec.logp_ul, adv_ul, dlp_ul);
  probe.loss -= clip_term(ev.logp_dl, rec.logp_dl, adv_dl, dlp_dl);

  double dv_u = 0.0, dv_d = 0.0, dv_g = 0.0;
  if (net.has_local_critics()) {
    const double wu = net.variant == CriticVariant::AHMRL
                          ? cfg.critic_weight_ul
                          : 1.0;
    const double wd = net.variant == CriticVariant::AHMRL
                          ? cfg.critic_weight_dl
                          : 1.0;
    const double eu = ev.v_u - y_ul;
    const double ed = ev.v_d - y_dl;
    probe.loss += wu * eu * eu + wd * ed * ed;
    dv_u = 2.0 * wu * eu;
    dv_d = 2.0 * wd * ed;
  }
  if (net.has_global_critic()) {
    const double wg = net.variant == CriticVariant::AHMRL
                          ? cfg.critic_weight_gl
                          : 1.0;
    const double eg = ev.v_g - y_gl;
    probe.loss += wg * eg * eg;
    dv_g = 2.0 * wg * eg;
  }
  backward_slot(net, rec, ev, -dlp_ul, -dlp_dl, dv_u, dv_d, dv_g, grads);

  auto flat = [](const MlpGrads& g) {
    std::vector<double> out;
    for (const auto& l : g.layers) {
      out.insert(out.end(), l.w.begin(), l.w.end());
      out.insert(out.end(), l.b.begin(), l.b.end());
    }
    return out;
  };
  probe.grad_ul_enc = flat(grads.ul_enc);
  probe.grad_dl_enc = flat(grads.dl_enc);
  probe.grad_ul_head = flat(grads.ul_head);
  probe.grad_dl_head = flat(grads.dl_head);
  if (net.has_local_critics()) {
    probe.grad_v_ul = flat(grads.v_ul);
    probe.grad_v_dl = flat(grads.v_dl);
  }
  if (net.has_global_critic()) probe.grad_v_gl = flat(grads.v_gl);
  probe.grad_logstd = grads.dl_logstd;
  return probe;
}

UpdateStats ppo_update(PolicyNet& net, PolicyNet& target, PolicyOptimizer& opt,
                       const TrajectoryBuffer& buffer,
                       const ScenarioConfig& cfg, int& window_counter,
                       RngStream& shuffle_rng) {
  UpdateStats stats;
  const int t_count = static_cast<int>(buffer.slots.size());
  if (t_count == 0) return stats;
  WindowTargets w = window_targets(target, buffer, cfg);

  std::vector<int> order(t_count);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.ppo_epochs; ++epoch) {
    // Fisher-Yates with the policy-sample stream keeps runs reproducible
    for (int i = t_count - 1; i > 0; --i) {
      std::swap(order[i], order[shuffle_rng.uniform_int(0, i)]);
    }
    for (int start = 0; start < t_count; start += cfg.minibatch) {
      const int end = std::min(t_count, start + cfg.minibatch);
      const int batch = end - start;
      PolicyGrads grads = PolicyGrads::zeros_like(net);
      double surr_ul = 0.0, surr_dl = 0.0, closs = 0.0;
      for (int i = start; i < end; ++i) {
        const SlotRecord& rec = buffer.slots[order[i]];
        const int t = order[i];
        SlotEval ev = forward_slot(net, rec);

        auto clip_term = [&](double logp_new, double logp_old, double adv,
                             double& dlogp) {
          const double ratio = std::exp(logp_new - logp_old);
          const double clipped =
              std::clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio);
          const double a = ratio * adv;
          const double b = clipped * adv;
          if (a <= b) {
            dlogp = ratio * adv;
            return a;
          }
          dlogp = 0.0;
          return b;
        };
        double dlp_ul = 0.0, dlp_dl = 0.0;
        surr_ul += clip_term(ev.logp_ul, rec.logp_ul, w.eff.ul[t], dlp_ul);
        surr_dl += clip_term(ev.logp_dl, rec.logp_dl, w.eff.dl[t], dlp_dl);

        double dv_u = 0.0, dv_d = 0.0, dv_g = 0.0;
        switch (net.variant) {
          case CriticVariant::AHMRL: {
            const double eu = ev.v_u - w.y_ul[t];
            const double ed = ev.v_d - w.y_dl[t];
            const double eg = ev.v_g - w.y_gl[t];
            closs += cfg.critic_weight_ul * eu * eu +
                     cfg.critic_weight_dl * ed * ed +
                     cfg.critic_weight_gl * eg * eg;
            dv_u = 2.0 * cfg.critic_weight_ul * eu;
            dv_d = 2.0 * cfg.critic_weight_dl * ed;
            dv_g = 2.0 * cfg.critic_weight_gl * eg;
            break;
          }
          case CriticVariant::MASC: {
            const double eg = ev.v_g - w.y_gl[t];
            closs += eg * eg;
            dv_g = 2.0 * eg;
            break;
          }
          case CriticVariant::AC: {
            const double eu = ev.v_u - w.y_ul[t];
            const double ed = ev.v_d - w.y_dl[t];
            closs += eu * eu + ed * ed;
            dv_u = 2.0 * eu;
            dv_d = 2.0 * ed;
            break;
          }
        }
        // minimize critic loss minus the clipped surrogates
        backward_slot(net, rec, ev, -dlp_ul, -dlp_dl, dv_u, dv_d, dv_g,
                      grads);
      }
      grads.scale(1.0 / batch);
      if (!grads.finite()) {
        std::ostringstream os;
        os << "ppo_update: non-finite gradient in window " << window_counter
           << " epoch " << epoch << " batch at " << start;
        throw NumericError(os.str());
      }
      opt.ul_enc.step(net.ul_enc, grads.ul_enc);
      opt.dl_enc.step(net.dl_enc, grads.dl_enc);
      opt.ul_head.step(net.ul_head, grads.ul_head);
      opt.dl_head.step(net.dl_head, grads.dl_head);
      if (net.has_local_critics()) {
        opt.v_ul.step(net.v_ul, grads.v_ul);
        opt.v_dl.step(net.v_dl, grads.v_dl);
      }
      if (net.has_global_critic()) opt.v_gl.step(net.v_gl, grads.v_gl);
      opt.logstd_velocity =
          cfg.momentum * opt.logstd_velocity + grads.dl_logstd;
      net.dl_logstd -= cfg.learning_rate * opt.logstd_velocity;
      net.dl_logstd = std::clamp(net.dl_logstd, kLogStdMin, kLogStdMax);

      stats.surrogate_ul += surr_ul / batch;
      stats.surrogate_dl += surr_dl / batch;
      stats.critic_loss += closs / batch;
      stats.minibatches++;
    }
  }
  if (stats.minibatches > 0) {
    stats.surrogate_ul /= stats.minibatches;
    stats.surrogate_dl /= stats.minibatches;
    stats.critic_loss /= stats.minibatches;
  }
  window_counter++;
  if (window_counter % cfg.target_refresh_windows == 0) target = net;
  return stats;
}

// --- checkpoints ----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'I', 'N', 'C', 'E', 'C', 'K', 'P', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_tensor(std::ostream& os, const std::string& name,
                  const std::vector<double>& data) {
  write_u32(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u64(os, data.size());
  os.write(reinterpret_cast<const char*>(data.data()),
           static_cast<std::streamsize>(data.size() * sizeof(double)));
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const PolicyNet& net,
                     std::uint64_t config_hash_value) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
  os.write(kMagic, sizeof kMagic);
  write_u64(os, config_hash_value);
  write_u32(os, static_cast<std::uint32_t>(net.variant));

  std::vector<std::pair<std::string, std::vector<double>>> tensors;
  tensors.emplace_back("ul_enc", flatten(net.ul_enc));
  tensors.emplace_back("dl_enc", flatten(net.dl_enc));
  tensors.emplace_back("ul_head", flatten(net.ul_head));
  tensors.emplace_back("dl_head", flatten(net.dl_head));
  tensors.emplace_back("dl_logstd", std::vector<double>{net.dl_logstd});
  if (net.has_local_critics()) {
    tensors.emplace_back("v_ul", flatten(net.v_ul));
    tensors.emplace_back("v_dl", flatten(net.v_dl));
  }
  if (net.has_global_critic()) {
    tensors.emplace_back("v_gl", flatten(net.v_gl));
  }
  write_u32(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, data] : tensors) write_tensor(os, name, data);
  if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

PolicyNet load_checkpoint(const std::string& path, const ScenarioConfig& cfg,
                          std::uint64_t expected_config_hash) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  const std::uint64_t stored_hash = read_u64(is);
  if (expected_config_hash != 0 && stored_hash != expected_config_hash) {
    throw std::runtime_error(
        "checkpoint was produced under a different config: " + path);
  }
  const auto variant = static_cast<CriticVariant>(read_u32(is));
  RngStream throwaway(0);
  PolicyNet net = PolicyNet::make(cfg, variant, throwaway);

  const std::uint32_t n_tensors = read_u32(is);
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    const std::uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const std::uint64_t count = read_u64(is);
    std::vector<double> data(count);
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!is) throw std::runtime_error("truncated checkpoint: " + path);
    if (name == "ul_enc") unflatten(net.ul_enc, data);
    else if (name == "dl_enc") unflatten(net.dl_enc, data);
    else if (name == "ul_head") unflatten(net.ul_head, data);
    else if (name == "dl_head") unflatten(net.dl_head, data);
    else if (name == "dl_logstd") net.dl_logstd = data.at(0);
    else if (name == "v_ul") unflatten(net.v_ul, data);
    else if (name == "v_dl") unflatten(net.v_dl, data);
    else if (name == "v_gl") unflatten(net.v_gl, data);
    else throw std::runtime_error("unknown checkpoint tensor: " + name);
  }
  return net;
}

}  // namespace ince
