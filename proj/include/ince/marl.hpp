#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ince/config.hpp"
#include "ince/game.hpp"
#include "ince/nn.hpp"
#include "ince/requests.hpp"
#include "ince/rng.hpp"

namespace ince {

enum class CriticVariant { AHMRL, MASC, AC };

CriticVariant parse_variant(const std::string& name);
std::string variant_name(CriticVariant v);

// --- state encoding ----------------------------------------------------

inline constexpr int kUlFeatures = 3;  // request, input size, uplink power
inline constexpr int kDlFeatures = 3;  // association, rendered size, input size

std::vector<double> ul_features(const ScenarioConfig& cfg,
                                std::span<const int> requests,
                                std::span<const TaskSpec> tasks,
                                std::span<const std::uint8_t> active);

std::vector<double> dl_features(const ScenarioConfig& cfg,
                                std::span<const std::uint8_t> ofmo,
                                std::span<const TaskSpec> tasks,
                                std::span<const std::uint8_t> active);

// --- rewards ------------------------------------------------------------

// +1 balanced (max-min load <= 1), -1 when any node exceeds capacity,
// 0 otherwise.
int ul_reward(std::span<const int> inc_loads, int capacity);

// Nonpositive energy penalty: mean normalized power scaled by 0.5.
double dl_reward(std::span<const double> dl_power_w,
                 const ScenarioConfig& cfg);

// Delay penalty plus the normalized total system utility.
double gl_reward(std::span<const double> utilities,
                 const ScenarioConfig& cfg);

// --- advantages ---------------------------------------------------------

// Truncated generalized advantage estimation; `terminal_value` stands in for
// the value after the last reward (0 at an episode end).
std::vector<double> gae(std::span<const double> rewards,
                        std::span<const double> values, double gamma,
                        double lambda, double terminal_value);

struct EffectiveAdvantages {
  std::vector<double> ul;
  std::vector<double> dl;
};

// Case map per critic architecture; missing streams are an error.
EffectiveAdvantages effective_advantages(
    CriticVariant variant, const std::optional<std::vector<double>>& a_ul,
    const std::optional<std::vector<double>>& a_dl,
    const std::optional<std::vector<double>>& a_gl);

// --- policy network -----------------------------------------------------

// Shared per-user encoders with mean pooling (order-independent state), a
// tanh-bounded score head for the offloading-mode preferences, a Gaussian
// head for downlink power, and the critic heads the variant calls for.
struct PolicyNet {
  CriticVariant variant = CriticVariant::AHMRL;
  int num_users = 0;
  int hidden = 64;
  Mlp ul_enc, dl_enc;
  Mlp ul_head, dl_head;
  double dl_logstd = -0.7;
  Mlp v_ul, v_dl;  // present for AHMRL and AC
  Mlp v_gl;        // present for AHMRL and MASC

  bool has_local_critics() const { return variant != CriticVariant::MASC; }
  bool has_global_critic() const { return variant != CriticVariant::AC; }

  static PolicyNet make(const ScenarioConfig& cfg, CriticVariant variant,
                        RngStream& init_rng);
};

inline constexpr double kLogStdMin = -6.907755278982137;  // log 1e-3
inline constexpr double kLogStdMax = 0.0;                 // log 1

struct StageForward {
  std::vector<MlpCache> enc_caches;
  std::vector<std::vector<double>> enc;
  std::vector<double> pooled;
  std::vector<MlpCache> head_caches;
  std::vector<double> raw;  // per-user head output
};

StageForward stage_forward(const Mlp& enc, const Mlp& head,
                           std::span<const double> features, int num_users);

// Per-user preference scores in [-1, 1].
std::vector<double> ul_actor_scores(const PolicyNet& net,
                                    std::span<const double> xu);

struct DlSample {
  std::vector<double> mean;        // sigmoid head output
  std::vector<double> action_pre;  // raw Gaussian samples
  std::vector<double> power_w;     // clipped and mapped to the power range
  double logp = 0.0;               // of the pre-clip samples
};

DlSample dl_actor_sample(const PolicyNet& net, std::span<const double> xd,
                         const ScenarioConfig& cfg, RngStream& rng);

// Log-likelihoods of recorded actions under the current parameters.
double ul_logp(std::span<const double> scores,
               std::span<const std::uint8_t> picks);
double dl_logp(std::span<const double> mean, double logstd,
               std::span<const double> action_pre);

struct StageValues {
  double v_ul = 0.0;
  double v_dl = 0.0;
  double v_gl = 0.0;
};

StageValues critic_values(const PolicyNet& net, std::span<const double> xu,
                          std::span<const double> xd);

// --- rollout buffer and updates ------------------------------------------

struct SlotRecord {
  std::vector<double> xu;  // uplink state, recorded before the downlink one
  std::vector<double> xd;
  std::vector<std::uint8_t> ofmo;
  std::vector<double> dl_action_pre;
  double logp_ul = 0.0;
  double logp_dl = 0.0;
  double reward_ul = 0.0;
  double reward_dl = 0.0;
  double reward_gl = 0.0;
};

struct TrajectoryBuffer {
  std::vector<SlotRecord> slots;

  void push(SlotRecord rec, int capacity) {
    slots.push_back(std::move(rec));
    if (static_cast<int>(slots.size()) > capacity) {
      slots.erase(slots.begin());
    }
  }
};

struct ActResult {
  OperatorDecision decision;
  SlotRecord record;  // rewards filled in by the caller after the slot runs
  std::vector<double> ul_scores;
};

// One asynchronous decision pass: uplink scores -> capacity-feasible
// offloading mode, then the downlink power sample.
ActResult act(const PolicyNet& net, const ScenarioConfig& cfg,
              std::span<const int> requests, std::span<const TaskSpec> tasks,
              std::span<const std::uint8_t> active, RngStream& sample_rng);

struct PolicyOptimizer {
  SgdMomentum ul_enc, dl_enc, ul_head, dl_head, v_ul, v_dl, v_gl;
  double logstd_velocity = 0.0;

  static PolicyOptimizer make(const PolicyNet& net, const ScenarioConfig& cfg);
};

struct UpdateStats {
  double surrogate_ul = 0.0;
  double surrogate_dl = 0.0;
  double critic_loss = 0.0;
  int minibatches = 0;
};

// Clipped-ratio policy update over one rollout window; critics regress on
// advantage-corrected targets from the periodically refreshed copy.
UpdateStats ppo_update(PolicyNet& net, PolicyNet& target,
                       PolicyOptimizer& opt, const TrajectoryBuffer& buffer,
                       const ScenarioConfig& cfg, int& window_counter,
                       RngStream& shuffle_rng);

// Weighted squared temporal-difference critic loss for a whole window (the
// same quantity ppo_update minimizes), exposed for verification.
double critic_window_loss(const PolicyNet& net, const PolicyNet& target,
                          const TrajectoryBuffer& buffer,
                          const ScenarioConfig& cfg);

// One slot's full update objective (clipped surrogates plus critic terms)
// with its exact parameter gradients; lets tests difference the loss against
// the analytic gradients.
struct SlotLossProbe {
  double loss = 0.0;
  std::vector<double> grad_ul_enc, grad_dl_enc;
  std::vector<double> grad_ul_head, grad_dl_head;
  std::vector<double> grad_v_ul, grad_v_dl, grad_v_gl;
  double grad_logstd = 0.0;
};

SlotLossProbe slot_loss_probe(const PolicyNet& net, const SlotRecord& rec,
                              double adv_ul, double adv_dl, double y_ul,
                              double y_dl, double y_gl,
                              const ScenarioConfig& cfg);

// --- checkpoints ----------------------------------------------------------

void save_checkpoint(const std::string& path, const PolicyNet& net,
                     std::uint64_t config_hash_value);
PolicyNet load_checkpoint(const std::string& path, const ScenarioConfig& cfg,
                          std::uint64_t expected_config_hash);

}  // namespace ince
