#include "ince/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "ince/rng.hpp"
#include "json.hpp"

namespace ince {

using nlohmann::json;

void ScenarioConfig::finalize_defaults() {
  if (inc_rates_hz.empty()) {
    // evenly spaced over the documented [1, 9] GHz node-capacity span
    inc_rates_hz.resize(num_inc);
    for (int k = 0; k < num_inc; ++k) {
      inc_rates_hz[k] = num_inc == 1
                            ? 5e9
                            : 1e9 + 8e9 * static_cast<double>(k) / (num_inc - 1);
    }
  }
  if (ofmo_capacity < 0) {
    ofmo_capacity = std::min(num_users, num_inc * inc_assoc_capacity);
  }
  if (task_class == "data-intensive") {
    task_size_lo_bits = 50e6;
    task_size_hi_bits = 150e6;
    task_cycles_lo = 0.1e6;
    task_cycles_hi = 0.5e6;
  } else if (task_class == "compute-intensive") {
    task_size_lo_bits = 8e6;  // 1 MB
    task_size_hi_bits = 32e6;
    task_cycles_lo = 1e9;
    task_cycles_hi = 2e9;
  }
}

std::vector<ConfigViolation> validate_config(const ScenarioConfig& c) {
  std::vector<ConfigViolation> v;
  auto req = [&](bool ok, const char* field, const char* msg) {
    if (!ok) v.push_back({field, msg});
  };
  req(c.num_users >= 1, "num_users", "must be >= 1");
  req(c.num_inc >= 1, "num_inc", "must be >= 1");
  req(c.num_antennas >= 1, "num_antennas", "must be >= 1");
  req(c.area_side_m > 0, "area_side_m", "must be positive");
  req(c.bandwidth_hz > 0, "bandwidth_hz", "must be positive");
  req(c.blocklength >= 1, "blocklength", "must be >= 1");
  req(c.decoding_error > 0 && c.decoding_error < 1, "decoding_error",
      "must lie in the open interval (0, 1)");
  req(c.ul_power_w > 0, "ul_power_w", "must be positive");
  req(c.dl_power_min_w >= 0, "dl_power_min_w", "must be nonnegative");
  req(c.dl_power_min_w < c.dl_power_max_w, "dl_power_max_w",
      "range must satisfy min < max");
  req(c.mec_rate_hz > 0, "mec_rate_hz", "must be positive");
  req(static_cast<int>(c.inc_rates_hz.size()) == c.num_inc, "inc_rates_hz",
      "must list one rate per INC node");
  for (double r : c.inc_rates_hz) {
    if (r <= 0) {
      v.push_back({"inc_rates_hz", "rates must be positive"});
      break;
    }
  }
  req(c.inc_assoc_capacity >= 1, "inc_assoc_capacity", "must be >= 1");
  req(c.ofmo_capacity >= 0, "ofmo_capacity", "must be nonnegative");
  req(c.ofmo_capacity <= c.num_users, "ofmo_capacity",
      "must not exceed num_users");
  req(c.dt_discrepancy >= 0 && c.dt_discrepancy < 1, "dt_discrepancy",
      "must lie in [0, 1)");
  req(c.task_class == "default" || c.task_class == "data-intensive" ||
          c.task_class == "compute-intensive",
      "task_class", "unknown preset");
  req(c.task_size_lo_bits > 0 && c.task_size_lo_bits <= c.task_size_hi_bits,
      "task_size_bits", "range must satisfy 0 < lo <= hi");
  req(c.task_cycles_lo > 0 && c.task_cycles_lo <= c.task_cycles_hi,
      "task_cycles", "range must satisfy 0 < lo <= hi");
  req(c.latency_bound_lo_s > 0 && c.latency_bound_lo_s <= c.latency_bound_hi_s,
      "latency_bound_s", "range must satisfy 0 < lo <= hi");
  req(c.render_slope_lo >= 1 && c.render_slope_lo <= c.render_slope_hi,
      "render_slope", "range must satisfy 1 <= lo <= hi");
  req(c.request.no_request_prob >= 0 && c.request.no_request_prob < 1,
      "requests.no_request_prob", "must lie in [0, 1)");
  req(c.request.zipf_exponent > 0, "requests.zipf_exponent",
      "must be positive");
  req(c.request.num_tasks >= 1, "requests.num_tasks", "must be >= 1");
  req(c.request.neighborhood >= 1 &&
          c.request.neighborhood <= c.request.num_tasks,
      "requests.neighborhood", "must lie in [1, num_tasks]");
  req(c.utility_scale > 0, "weights.utility_scale", "must be positive");
  req(c.cost_latency_weight >= 0 && c.cost_energy_weight >= 0 &&
          c.cost_latency_weight + c.cost_energy_weight > 0,
      "weights.cost", "cost weights must be nonnegative with positive sum");
  req(c.wired_base_s >= 0, "queueing.wired_base_s", "must be nonnegative");
  req(c.backhaul_bps > 0, "queueing.backhaul_bps", "must be positive");
  req(c.step_inc_fraction > 0 && c.step_inc_share > 0 &&
          c.step_latency_mult > 0 && c.step_share_mult > 0,
      "split.steps", "all step sizes must be positive");
  req(c.split_max_iters >= 1, "split.max_iters", "must be >= 1");
  req(c.split_tolerance > 0, "split.tolerance", "must be positive");
  req(c.game_max_rounds >= 1, "game_max_rounds", "must be >= 1");
  req(c.discount > 0 && c.discount < 1, "learning.discount",
      "must lie in the open interval (0, 1)");
  req(c.gae_lambda > 0 && c.gae_lambda <= 1, "learning.gae_lambda",
      "must lie in (0, 1]");
  req(c.clip_ratio > 0, "learning.clip_ratio", "must be positive");
  req(c.ppo_epochs >= 1, "learning.ppo_epochs", "must be >= 1");
  req(c.minibatch >= 1, "learning.minibatch", "must be >= 1");
  req(c.learning_rate > 0, "learning.learning_rate", "must be positive");
  req(c.momentum >= 0 && c.momentum < 1, "learning.momentum",
      "must lie in [0, 1)");
  req(c.hidden >= 1, "learning.hidden", "must be >= 1");
  req(c.episode_slots >= 1, "learning.episode_slots", "must be >= 1");
  req(c.replay_capacity >= 1, "learning.replay_capacity", "must be >= 1");
  req(c.target_refresh_windows >= 1, "learning.target_refresh_windows",
      "must be >= 1");
  req(c.energy_model == "rate" || c.energy_model == "latency", "energy_model",
      "must be \"rate\" or \"latency\"");
  return v;
}

namespace {

const std::set<std::string>& top_level_keys() {
  static const std::set<std::string> keys = {
      "num_users",      "num_inc",       "num_antennas", "area_side_m",
      "bandwidth_hz",   "noise_psd_dbm_hz", "blocklength", "decoding_error",
      "ul_power_w",     "dl_power_w",    "mec_rate_hz",  "inc_rates_hz",
      "inc_assoc_capacity", "ofmo_capacity", "dt_discrepancy", "task",
      "requests",       "weights",       "queueing",     "split",
      "game_max_rounds", "learning",     "energy_model", "seed"};
  return keys;
}

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& scope) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError("unknown config key: " +
                        (scope.empty() ? it.key() : scope + "." + it.key()));
    }
  }
}

template <typename T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("invalid value for ") + key + ": " +
                        e.what());
    }
  }
}

void get_range(const json& j, const char* key, double& lo, double& hi) {
  if (!j.contains(key)) return;
  const json& r = j.at(key);
  if (!r.is_array() || r.size() != 2) {
    throw ConfigError(std::string(key) + " must be a [lo, hi] pair");
  }
  lo = r[0].get<double>();
  hi = r[1].get<double>();
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig cfg;
  bool blank = std::all_of(text.begin(), text.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
  if (!blank) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config parse failure: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be an object");
    check_keys(j, top_level_keys(), "");

    get(j, "num_users", cfg.num_users);
    get(j, "num_inc", cfg.num_inc);
    get(j, "num_antennas", cfg.num_antennas);
    get(j, "area_side_m", cfg.area_side_m);
    get(j, "bandwidth_hz", cfg.bandwidth_hz);
    get(j, "noise_psd_dbm_hz", cfg.noise_psd_dbm_hz);
    get(j, "blocklength", cfg.blocklength);
    get(j, "decoding_error", cfg.decoding_error);
    get(j, "ul_power_w", cfg.ul_power_w);
    get_range(j, "dl_power_w", cfg.dl_power_min_w, cfg.dl_power_max_w);
    get(j, "mec_rate_hz", cfg.mec_rate_hz);
    get(j, "inc_rates_hz", cfg.inc_rates_hz);
    get(j, "inc_assoc_capacity", cfg.inc_assoc_capacity);
    if (j.contains("ofmo_capacity")) {
      cfg.ofmo_capacity = j.at("ofmo_capacity").get<int>();
    } else {
      cfg.ofmo_capacity = -1;  // derive in finalize_defaults
    }
    get(j, "dt_discrepancy", cfg.dt_discrepancy);

    if (j.contains("task")) {
      const json& t = j.at("task");
      check_keys(t,
                 {"class", "size_bits", "cycles", "latency_bound_s",
                  "render_slope"},
                 "task");
      get(t, "class", cfg.task_class);
      get_range(t, "size_bits", cfg.task_size_lo_bits, cfg.task_size_hi_bits);
      get_range(t, "cycles", cfg.task_cycles_lo, cfg.task_cycles_hi);
      get_range(t, "latency_bound_s", cfg.latency_bound_lo_s,
                cfg.latency_bound_hi_s);
      get_range(t, "render_slope", cfg.render_slope_lo, cfg.render_slope_hi);
    }
    if (j.contains("requests")) {
      const json& r = j.at("requests");
      check_keys(r,
                 {"no_request_prob", "zipf_exponent", "neighborhood",
                  "num_tasks"},
                 "requests");
      get(r, "no_request_prob", cfg.request.no_request_prob);
      get(r, "zipf_exponent", cfg.request.zipf_exponent);
      get(r, "neighborhood", cfg.request.neighborhood);
      get(r, "num_tasks", cfg.request.num_tasks);
    }
    if (j.contains("weights")) {
      const json& w = j.at("weights");
      check_keys(w,
                 {"g_t", "w_m", "w_l", "w_e", "critic_ul", "critic_dl",
                  "critic_gl", "utility_scale"},
                 "weights");
      get(w, "g_t", cfg.utility_latency_weight);
      get(w, "w_m", cfg.utility_energy_weight);
      get(w, "w_l", cfg.cost_latency_weight);
      get(w, "w_e", cfg.cost_energy_weight);
      get(w, "critic_ul", cfg.critic_weight_ul);
      get(w, "critic_dl", cfg.critic_weight_dl);
      get(w, "critic_gl", cfg.critic_weight_gl);
      get(w, "utility_scale", cfg.utility_scale);
    }
    if (j.contains("queueing")) {
      const json& q = j.at("queueing");
      check_keys(q, {"wired_base_s", "backhaul_bps"}, "queueing");
      get(q, "wired_base_s", cfg.wired_base_s);
      get(q, "backhaul_bps", cfg.backhaul_bps);
    }
    if (j.contains("split")) {
      const json& s = j.at("split");
      check_keys(s,
                 {"step_inc_fraction", "step_inc_share", "step_latency_mult",
                  "step_share_mult", "max_iters", "tolerance"},
                 "split");
      get(s, "step_inc_fraction", cfg.step_inc_fraction);
      get(s, "step_inc_share", cfg.step_inc_share);
      get(s, "step_latency_mult", cfg.step_latency_mult);
      get(s, "step_share_mult", cfg.step_share_mult);
      get(s, "max_iters", cfg.split_max_iters);
      get(s, "tolerance", cfg.split_tolerance);
    }
    get(j, "game_max_rounds", cfg.game_max_rounds);
    if (j.contains("learning")) {
      const json& l = j.at("learning");
      check_keys(l,
                 {"discount", "gae_lambda", "clip_ratio", "ppo_epochs",
                  "minibatch", "learning_rate", "momentum", "hidden",
                  "episode_slots", "replay_capacity", "target_refresh_windows",
                  "normalize_advantages", "logstd_init"},
                 "learning");
      get(l, "discount", cfg.discount);
      get(l, "gae_lambda", cfg.gae_lambda);
      get(l, "clip_ratio", cfg.clip_ratio);
      get(l, "ppo_epochs", cfg.ppo_epochs);
      get(l, "minibatch", cfg.minibatch);
      get(l, "learning_rate", cfg.learning_rate);
      get(l, "momentum", cfg.momentum);
      get(l, "hidden", cfg.hidden);
      get(l, "episode_slots", cfg.episode_slots);
      get(l, "replay_capacity", cfg.replay_capacity);
      get(l, "target_refresh_windows", cfg.target_refresh_windows);
      get(l, "normalize_advantages", cfg.normalize_advantages);
      get(l, "logstd_init", cfg.logstd_init);
    }
    get(j, "energy_model", cfg.energy_model);
    get(j, "seed", cfg.seed);
  } else {
    cfg.ofmo_capacity = -1;
  }

  cfg.finalize_defaults();
  auto violations = validate_config(cfg);
  if (!violations.empty()) {
    std::ostringstream os;
    os << "config invariant violation:";
    for (const auto& x : violations) os << " [" << x.field << "] " << x.message;
    throw ConfigError(os.str());
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ScenarioConfig& c) {
  json j;
  j["num_users"] = c.num_users;
  j["num_inc"] = c.num_inc;
  j["num_antennas"] = c.num_antennas;
  j["area_side_m"] = c.area_side_m;
  j["bandwidth_hz"] = c.bandwidth_hz;
  j["noise_psd_dbm_hz"] = c.noise_psd_dbm_hz;
  j["blocklength"] = c.blocklength;
  j["decoding_error"] = c.decoding_error;
  j["ul_power_w"] = c.ul_power_w;
  j["dl_power_w"] = {c.dl_power_min_w, c.dl_power_max_w};
  j["mec_rate_hz"] = c.mec_rate_hz;
  j["inc_rates_hz"] = c.inc_rates_hz;
  j["inc_assoc_capacity"] = c.inc_assoc_capacity;
  j["ofmo_capacity"] = c.ofmo_capacity;
  j["dt_discrepancy"] = c.dt_discrepancy;
  j["task"] = {{"class", c.task_class},
               {"size_bits", {c.task_size_lo_bits, c.task_size_hi_bits}},
               {"cycles", {c.task_cycles_lo, c.task_cycles_hi}},
               {"latency_bound_s",
                {c.latency_bound_lo_s, c.latency_bound_hi_s}},
               {"render_slope", {c.render_slope_lo, c.render_slope_hi}}};
  j["requests"] = {{"no_request_prob", c.request.no_request_prob},
                   {"zipf_exponent", c.request.zipf_exponent},
                   {"neighborhood", c.request.neighborhood},
                   {"num_tasks", c.request.num_tasks}};
  j["weights"] = {{"g_t", c.utility_latency_weight},
                  {"w_m", c.utility_energy_weight},
                  {"w_l", c.cost_latency_weight},
                  {"w_e", c.cost_energy_weight},
                  {"critic_ul", c.critic_weight_ul},
                  {"critic_dl", c.critic_weight_dl},
                  {"critic_gl", c.critic_weight_gl},
                  {"utility_scale", c.utility_scale}};
  j["queueing"] = {{"wired_base_s", c.wired_base_s},
                   {"backhaul_bps", c.backhaul_bps}};
  j["split"] = {{"step_inc_fraction", c.step_inc_fraction},
                {"step_inc_share", c.step_inc_share},
                {"step_latency_mult", c.step_latency_mult},
                {"step_share_mult", c.step_share_mult},
                {"max_iters", c.split_max_iters},
                {"tolerance", c.split_tolerance}};
  j["game_max_rounds"] = c.game_max_rounds;
  j["learning"] = {{"discount", c.discount},
                   {"gae_lambda", c.gae_lambda},
                   {"clip_ratio", c.clip_ratio},
                   {"ppo_epochs", c.ppo_epochs},
                   {"minibatch", c.minibatch},
                   {"learning_rate", c.learning_rate},
                   {"momentum", c.momentum},
                   {"hidden", c.hidden},
                   {"episode_slots", c.episode_slots},
                   {"replay_capacity", c.replay_capacity},
                   {"target_refresh_windows", c.target_refresh_windows},
                   {"normalize_advantages", c.normalize_advantages},
                   {"logstd_init", c.logstd_init}};
  j["energy_model"] = c.energy_model;
  j["seed"] = c.seed;
  return j.dump(2);
}

std::uint64_t config_hash(const ScenarioConfig& cfg) {
  return fnv1a64(serialize_config(cfg));
}

bool operator==(const RequestParams& a, const RequestParams& b) {
  return a.no_request_prob == b.no_request_prob &&
         a.zipf_exponent == b.zipf_exponent &&
         a.neighborhood == b.neighborhood && a.num_tasks == b.num_tasks;
}

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

}  // namespace ince
