#include "ince/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace ince {

namespace {

// fixed-format doubles keep run outputs byte-stable
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// full precision for values that are read back (cost-gain references)
std::string fmt_exact(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

BaselineOperator::Kind BaselineOperator::parse(const std::string& name) {
  if (name == "gm-rn") return Kind::GmRn;
  if (name == "equal") return Kind::Equal;
  if (name == "prop") return Kind::Proportional;
  throw std::invalid_argument("unknown baseline: " + name);
}

DecideResult BaselineOperator::decide(const SlotView& view, RngStream& rng) {
  DecideResult out;
  switch (kind_) {
    case Kind::GmRn:
      out.decision = gm_rn(view.cfg, rng);
      break;
    case Kind::Equal:
      out.decision = equal_policy(view.cfg);
      break;
    case Kind::Proportional:
      out.decision = proportional_policy(view.cfg, view.ch,
                                         view.prev_cn_load_cycles);
      break;
  }
  return out;
}

std::string BaselineOperator::name() const {
  switch (kind_) {
    case Kind::GmRn: return "gm-rn";
    case Kind::Equal: return "equal";
    case Kind::Proportional: return "prop";
  }
  return "?";
}

DecideResult LearnedOperator::decide(const SlotView& view, RngStream& rng) {
  ActResult act_result = act(net_, view.cfg, view.requests, view.tasks,
                             view.active, rng);
  DecideResult out;
  out.decision = std::move(act_result.decision);
  out.record = std::move(act_result.record);
  return out;
}

EpisodeResult run_episode(OperatorPolicy& policy, const ScenarioConfig& cfg,
                          RngStreams& streams) {
  EpisodeResult ep;
  const auto matrix = transition_matrix(cfg.request);
  RequestState requests = initial_requests(cfg.num_users);
  std::vector<double> cn_loads(cfg.num_inc, 0.0);
  double mec_load = 0.0;

  double latency_acc = 0.0;
  int latency_count = 0;

  for (int slot = 0; slot < cfg.episode_slots; ++slot) {
    SlotSnapshot snap;
    snap.slot = slot;
    requests = step_requests(requests, matrix, streams.requests);
    snap.requests = requests;
    snap.active.resize(cfg.num_users);
    snap.tasks.resize(cfg.num_users);
    for (int m = 0; m < cfg.num_users; ++m) {
      snap.active[m] = requests[m] != 0;
      if (snap.active[m]) {
        snap.tasks[m] = sample_task(requests[m], cfg, streams.tasks);
      }
    }
    const ChannelRealization ch = draw_realization(cfg, streams.channel);

    SlotView view{cfg,      requests, snap.tasks, snap.active,
                  ch,       cn_loads, mec_load};
    DecideResult dec = policy.decide(view, streams.policy_sample);
    snap.decision = dec.decision;

    SlotGame game(cfg, ch, snap.decision, snap.tasks, snap.active, cn_loads,
                  mec_load);
    DynamicsResult dyn = game.run_dynamics(cfg.game_max_rounds);
    snap.profile = dyn.profile;
    snap.ne_rounds = dyn.rounds;
    snap.ne_moves = dyn.moves;
    snap.ne_converged = dyn.converged;
    snap.ne_equilibrium = dyn.equilibrium;

    snap.outcome = evaluate_slot(cfg, ch, snap.decision, snap.tasks,
                                 snap.active, snap.profile);
    cn_loads = snap.outcome.cn_cycles;
    mec_load = snap.outcome.mec_cycles;

    if (dec.record) {
      SlotRecord rec = std::move(*dec.record);
      rec.reward_ul = snap.outcome.reward_ul;
      rec.reward_dl = snap.outcome.reward_dl;
      rec.reward_gl = snap.outcome.reward_gl;
      ep.buffer.push(std::move(rec), cfg.replay_capacity);
    }

    ep.reward_ul_mean += snap.outcome.reward_ul;
    ep.reward_dl_mean += snap.outcome.reward_dl;
    ep.reward_gl_mean += snap.outcome.reward_gl;
    ep.utility_mean += snap.outcome.sum_utility;
    ep.max_ul_rate_mean += snap.outcome.max_ul_rate_bps;
    ep.energy_total += snap.outcome.total_energy;
    ep.violations += snap.outcome.violations;
    ep.ne_rounds_mean += dyn.rounds;
    ep.all_converged = ep.all_converged && dyn.converged;
    for (const auto& u : snap.outcome.users) {
      if (u.active) {
        latency_acc += u.latency.total;
        latency_count++;
      }
    }
    ep.slots.push_back(std::move(snap));
  }
  const double n = cfg.episode_slots;
  ep.reward_ul_mean /= n;
  ep.reward_dl_mean /= n;
  ep.reward_gl_mean /= n;
  ep.utility_mean /= n;
  ep.max_ul_rate_mean /= n;
  ep.ne_rounds_mean /= n;
  ep.latency_mean = latency_count > 0 ? latency_acc / latency_count : 0.0;
  return ep;
}

std::vector<std::pair<double, double>> compute_cdf(
    std::vector<double> samples) {
  if (samples.empty()) {
    throw std::invalid_argument("compute_cdf: empty sample set");
  }
  std::sort(samples.begin(), samples.end());
  std::vector<std::pair<double, double>> cdf;
  cdf.reserve(samples.size());
  const double n = static_cast<double>(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    cdf.emplace_back(samples[i], (i + 1) / n);
  }
  return cdf;
}

double normalized_auc(std::span<const double> series) {
  if (series.empty()) return 0.0;
  double lo = series[0], hi = series[0];
  for (double v : series) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi - lo;
  auto norm = [&](double v) { return span > 0 ? (v - lo) / span : 0.0; };
  if (series.size() == 1) return norm(series[0]);
  double auc = 0.0;
  for (size_t i = 0; i + 1 < series.size(); ++i) {
    auc += 0.5 * (norm(series[i]) + norm(series[i + 1]));
  }
  return auc / (series.size() - 1);
}

std::string make_run_id(const ScenarioConfig& cfg, const std::string& policy,
                        int episodes) {
  std::uint64_t h = config_hash(cfg);
  h = fnv1a64(policy, h);
  h = fnv1a64(std::to_string(cfg.seed), h);
  h = fnv1a64(std::to_string(episodes), h);
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

namespace {

constexpr const char* kSlotHeader =
    "episode,slot,user,request,active,o,dl_power_w,channel,inc_fraction,"
    "inc_share,task_bits,task_cycles,bound_s,ul_tx_s,cn_exec_s,cn_queue_s,"
    "forward_s,mec_exec_s,mec_queue_s,dl_tx_s,total_s,ref_total_s,"
    "ul_rate_bps,dl_rate_bps,dl_energy,utility,violated,ne_rounds,"
    "ne_equilibrium,reward_ul,reward_dl,reward_gl";

constexpr const char* kEpisodeHeader =
    "episode,reward_ul,reward_dl,reward_gl,utility,max_ul_rate,energy,"
    "latency,violations,ne_rounds";

void write_slot_rows(std::ofstream& os, int episode, const SlotSnapshot& s) {
  for (int m = 0; m < static_cast<int>(s.outcome.users.size()); ++m) {
    const UserSlotOutcome& u = s.outcome.users[m];
    os << episode << ',' << s.slot << ',' << m << ',' << s.requests[m] << ','
       << int(s.active[m]) << ',' << int(s.decision.collaborate[m]) << ','
       << fmt(s.decision.dl_power_w[m]) << ',' << u.channel << ','
       << fmt(u.split.inc_fraction) << ',' << fmt(u.split.inc_share) << ','
       << fmt(u.active ? s.tasks[m].input_bits : 0.0) << ','
       << fmt(u.active ? s.tasks[m].cycles : 0.0) << ','
       << fmt(u.active ? s.tasks[m].latency_bound_s : 0.0) << ','
       << fmt(u.latency.ul_tx) << ',' << fmt(u.latency.cn_exec) << ','
       << fmt(u.latency.cn_queue) << ',' << fmt(u.latency.forward) << ','
       << fmt(u.latency.mec_exec) << ',' << fmt(u.latency.mec_queue) << ','
       << fmt(u.latency.dl_tx) << ',' << fmt(u.latency.total) << ','
       << fmt(u.ref_total_s) << ',' << fmt(u.ul_rate_bps) << ','
       << fmt(u.dl_rate_bps) << ',' << fmt(u.dl_energy) << ','
       << fmt(u.utility) << ',' << int(u.latency.bound_violated) << ','
       << s.ne_rounds << ',' << int(s.ne_equilibrium) << ','
       << fmt(s.outcome.reward_ul) << ',' << fmt(s.outcome.reward_dl) << ','
       << fmt(s.outcome.reward_gl) << '\n';
  }
}

void write_episode_row(std::ofstream& os, const EpisodeStats& e) {
  os << e.episode << ',' << fmt(e.reward_ul) << ',' << fmt(e.reward_dl) << ','
     << fmt(e.reward_gl) << ',' << fmt(e.utility) << ','
     << fmt(e.max_ul_rate) << ',' << fmt(e.energy) << ',' << fmt(e.latency)
     << ',' << e.violations << ',' << fmt(e.ne_rounds) << '\n';
}

EpisodeStats to_stats(int episode, const EpisodeResult& ep) {
  EpisodeStats e;
  e.episode = episode;
  e.reward_ul = ep.reward_ul_mean;
  e.reward_dl = ep.reward_dl_mean;
  e.reward_gl = ep.reward_gl_mean;
  e.utility = ep.utility_mean;
  e.max_ul_rate = ep.max_ul_rate_mean;
  e.energy = ep.energy_total;
  e.latency = ep.latency_mean;
  e.violations = ep.violations;
  e.ne_rounds = ep.ne_rounds_mean;
  return e;
}

// per-user and per-slot cost aggregates backing the gain CDFs
struct PgAccumulator {
  std::vector<double> user_latency, user_energy;
  std::vector<int> user_count;
  std::vector<double> slot_latency, slot_energy;

  explicit PgAccumulator(int num_users)
      : user_latency(num_users, 0.0),
        user_energy(num_users, 0.0),
        user_count(num_users, 0) {}

  void add(const SlotSnapshot& s) {
    double lat = 0.0, en = 0.0;
    for (size_t m = 0; m < s.outcome.users.size(); ++m) {
      const UserSlotOutcome& u = s.outcome.users[m];
      if (!u.active) continue;
      user_latency[m] += u.pg_latency_s;
      user_energy[m] += u.dl_energy;
      user_count[m]++;
      lat += u.pg_latency_s;
      en += u.dl_energy;
    }
    slot_latency.push_back(lat);
    slot_energy.push_back(en);
  }
};

void write_pg_files(const RunPaths& paths, const PgAccumulator& pg) {
  std::ofstream ou(paths.pg_user_csv());
  ou << "user,slots,mean_latency_s,mean_energy\n";
  for (size_t m = 0; m < pg.user_latency.size(); ++m) {
    const int n = pg.user_count[m];
    ou << m << ',' << n << ',' << fmt_exact(n ? pg.user_latency[m] / n : 0.0)
       << ',' << fmt_exact(n ? pg.user_energy[m] / n : 0.0) << '\n';
  }
  std::ofstream os(paths.pg_slot_csv());
  os << "gslot,latency_s,energy\n";
  for (size_t t = 0; t < pg.slot_latency.size(); ++t) {
    os << t << ',' << fmt_exact(pg.slot_latency[t]) << ','
       << fmt_exact(pg.slot_energy[t]) << '\n';
  }
}

struct PgReference {
  std::vector<int> user_count;
  std::vector<double> user_latency, user_energy;  // means
  std::vector<double> slot_latency, slot_energy;  // per global slot
};

PgReference read_pg_reference(const RunPaths& paths) {
  PgReference ref;
  std::ifstream iu(paths.pg_user_csv());
  if (!iu) {
    throw std::runtime_error("reference run lacks " + paths.pg_user_csv());
  }
  std::string line;
  std::getline(iu, line);  // header
  while (std::getline(iu, line)) {
    std::istringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    std::getline(ss, tok, ',');
    ref.user_count.push_back(std::stoi(tok));
    std::getline(ss, tok, ',');
    ref.user_latency.push_back(std::stod(tok));
    std::getline(ss, tok, ',');
    ref.user_energy.push_back(std::stod(tok));
  }
  std::ifstream is(paths.pg_slot_csv());
  if (!is) {
    throw std::runtime_error("reference run lacks " + paths.pg_slot_csv());
  }
  std::getline(is, line);
  while (std::getline(is, line)) {
    std::istringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    std::getline(ss, tok, ',');
    ref.slot_latency.push_back(std::stod(tok));
    std::getline(ss, tok, ',');
    ref.slot_energy.push_back(std::stod(tok));
  }
  return ref;
}

void write_cdf_csv(const std::string& path,
                   const std::vector<std::pair<double, double>>& cdf) {
  std::ofstream os(path);
  os << "value,fraction\n";
  for (const auto& [v, f] : cdf) os << fmt(v) << ',' << fmt(f) << '\n';
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void write_summary(const RunPaths& paths, const RunSummary& s) {
  nlohmann::json j;
  j["run_id"] = s.run_id;
  j["policy"] = s.policy;
  j["config_hash"] = s.config_hash_value;
  j["seed"] = s.seed;
  j["episodes"] = s.episodes;
  nlohmann::json auc = nlohmann::json::object();
  for (const auto& [k, v] : s.auc) auc[k] = v;
  j["normalized_auc"] = auc;
  if (!s.per_episode.empty()) {
    const EpisodeStats& last = s.per_episode.back();
    j["final"] = {{"reward_ul", last.reward_ul},
                  {"reward_dl", last.reward_dl},
                  {"reward_gl", last.reward_gl},
                  {"utility", last.utility},
                  {"max_ul_rate", last.max_ul_rate},
                  {"energy", last.energy},
                  {"latency", last.latency}};
  }
  if (s.pg_user_median) j["pg_user_median"] = *s.pg_user_median;
  if (s.pg_operator_median) j["pg_operator_median"] = *s.pg_operator_median;
  std::ofstream os(paths.summary_json());
  os << j.dump(2) << '\n';
}

void fill_auc(RunSummary& s) {
  auto series = [&](auto getter) {
    std::vector<double> v;
    v.reserve(s.per_episode.size());
    for (const auto& e : s.per_episode) v.push_back(getter(e));
    return v;
  };
  s.auc = {
      {"reward_gl", normalized_auc(series([](auto& e) { return e.reward_gl; }))},
      {"reward_ul", normalized_auc(series([](auto& e) { return e.reward_ul; }))},
      {"reward_dl", normalized_auc(series([](auto& e) { return e.reward_dl; }))},
      {"max_ul_rate",
       normalized_auc(series([](auto& e) { return e.max_ul_rate; }))},
      {"utility", normalized_auc(series([](auto& e) { return e.utility; }))},
      {"energy", normalized_auc(series([](auto& e) { return e.energy; }))},
      {"latency", normalized_auc(series([](auto& e) { return e.latency; }))},
  };
}

struct RunWriter {
  RunPaths paths;
  std::ofstream slots, episodes;

  explicit RunWriter(const std::string& dir, const ScenarioConfig& cfg)
      : paths{dir} {
    std::filesystem::create_directories(dir);
    std::ofstream cfg_out(paths.config_json());
    cfg_out << serialize_config(cfg) << '\n';
    slots.open(paths.slots_csv());
    slots << kSlotHeader << '\n';
    episodes.open(paths.episodes_csv());
    episodes << kEpisodeHeader << '\n';
  }
};

}  // namespace

RunResult train(const ScenarioConfig& cfg, CriticVariant variant,
                int episodes, const std::string& out_dir) {
  RunWriter writer(out_dir, cfg);
  RngStreams streams = RngStreams::make(cfg.seed);
  PolicyNet net = PolicyNet::make(cfg, variant, streams.policy_init);
  PolicyNet target = net;
  PolicyOptimizer opt = PolicyOptimizer::make(net, cfg);
  int window_counter = 0;

  RunSummary summary;
  summary.policy = variant_name(variant);
  summary.run_id = make_run_id(cfg, summary.policy, episodes);
  summary.config_hash_value = config_hash(cfg);
  summary.seed = cfg.seed;
  summary.episodes = episodes;

  PgAccumulator pg(cfg.num_users);
  LearnedOperator op(std::move(net));
  for (int episode = 0; episode < episodes; ++episode) {
    EpisodeResult ep = run_episode(op, cfg, streams);
    for (const auto& s : ep.slots) {
      write_slot_rows(writer.slots, episode, s);
      pg.add(s);
    }
    EpisodeStats stats = to_stats(episode, ep);
    write_episode_row(writer.episodes, stats);
    summary.per_episode.push_back(stats);

    const PolicyNet before_update = op.net();
    try {
      ppo_update(op.net(), target, opt, ep.buffer, cfg, window_counter,
                 streams.policy_sample);
    } catch (const NumericError&) {
      // keep the last finite parameters reachable for postmortems
      save_checkpoint(writer.paths.checkpoint(), before_update,
                      summary.config_hash_value);
      throw;
    }
  }
  save_checkpoint(writer.paths.checkpoint(), op.net(),
                  summary.config_hash_value);
  fill_auc(summary);
  write_pg_files(writer.paths, pg);
  write_summary(writer.paths, summary);
  return {summary, writer.paths};
}

RunResult evaluate(OperatorPolicy& policy, const ScenarioConfig& cfg,
                   int episodes, const std::string& out_dir,
                   const std::optional<std::string>& reference_dir) {
  RunWriter writer(out_dir, cfg);
  RngStreams streams = RngStreams::make(cfg.seed);

  RunSummary summary;
  summary.policy = policy.name();
  summary.run_id = make_run_id(cfg, summary.policy, episodes);
  summary.config_hash_value = config_hash(cfg);
  summary.seed = cfg.seed;
  summary.episodes = episodes;

  PgAccumulator pg(cfg.num_users);
  for (int episode = 0; episode < episodes; ++episode) {
    EpisodeResult ep = run_episode(policy, cfg, streams);
    for (const auto& s : ep.slots) {
      write_slot_rows(writer.slots, episode, s);
      pg.add(s);
    }
    EpisodeStats stats = to_stats(episode, ep);
    write_episode_row(writer.episodes, stats);
    summary.per_episode.push_back(stats);
  }
  fill_auc(summary);
  write_pg_files(writer.paths, pg);

  if (reference_dir) {
    RunPaths ref_paths{*reference_dir};
    const PgReference ref = read_pg_reference(ref_paths);

    std::vector<double> user_gains;
    for (size_t m = 0; m < pg.user_latency.size() && m < ref.user_count.size();
         ++m) {
      if (pg.user_count[m] == 0 || ref.user_count[m] == 0) continue;
      user_gains.push_back(cost_gain(
          ref.user_latency[m], ref.user_energy[m],
          pg.user_latency[m] / pg.user_count[m],
          pg.user_energy[m] / pg.user_count[m], cfg));
    }
    std::vector<double> op_gains;
    const size_t n_slots =
        std::min(pg.slot_latency.size(), ref.slot_latency.size());
    for (size_t t = 0; t < n_slots; ++t) {
      if (pg.slot_latency[t] <= 0 || ref.slot_latency[t] <= 0) continue;
      op_gains.push_back(cost_gain(ref.slot_latency[t], ref.slot_energy[t],
                                   pg.slot_latency[t], pg.slot_energy[t],
                                   cfg));
    }
    if (!user_gains.empty()) {
      write_cdf_csv(writer.paths.cdf_user_csv(), compute_cdf(user_gains));
      summary.pg_user_median = median(user_gains);
    }
    if (!op_gains.empty()) {
      write_cdf_csv(writer.paths.cdf_operator_csv(), compute_cdf(op_gains));
      summary.pg_operator_median = median(op_gains);
    }
  }
  write_summary(writer.paths, summary);
  return {summary, writer.paths};
}

}  // namespace ince
