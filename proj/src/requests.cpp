#include "ince/requests.hpp"

#include <cmath>
#include <stdexcept>

namespace ince {

std::vector<std::vector<double>> transition_matrix(const RequestParams& p) {
  const int f_count = p.num_tasks;
  const int n_states = f_count + 1;
  const double r = p.no_request_prob;
  std::vector<std::vector<double>> t(n_states,
                                     std::vector<double>(n_states, 0.0));

  // idle row: Zipf over tasks, leftover mass as an idle self-loop
  double zipf_norm = 0.0;
  for (int f = 1; f <= f_count; ++f) zipf_norm += std::pow(f, -p.zipf_exponent);
  t[0][0] = r;
  for (int f = 1; f <= f_count; ++f) {
    t[0][f] = (1.0 - r) * std::pow(f, -p.zipf_exponent) / zipf_norm;
  }

  for (int i = 1; i <= f_count; ++i) {
    t[i][0] = r;
    std::vector<int> targets;
    bool wraps_to_idle = false;
    for (int q = 1; q <= p.neighborhood; ++q) {
      const int j = (i + q) % n_states;
      if (j == 0) {
        wraps_to_idle = true;
      } else {
        targets.push_back(j);
      }
    }
    const double mass = (1.0 - r);
    if (targets.empty()) {
      t[i][i] += mass;  // neighborhood collapsed entirely onto idle
    } else if (wraps_to_idle) {
      for (int j : targets) t[i][j] += mass / targets.size();
    } else {
      for (int j : targets) t[i][j] += mass / p.neighborhood;
    }
  }
  return t;
}

RequestState initial_requests(int num_users) {
  return RequestState(num_users, 0);
}

RequestState step_requests(const RequestState& state,
                           const std::vector<std::vector<double>>& matrix,
                           RngStream& rng) {
  RequestState next(state.size(), 0);
  const int n_states = static_cast<int>(matrix.size());
  for (size_t m = 0; m < state.size(); ++m) {
    const auto& row = matrix[state[m]];
    const double u = rng.uniform();
    double acc = 0.0;
    int chosen = n_states - 1;
    for (int j = 0; j < n_states; ++j) {
      acc += row[j];
      if (u < acc) {
        chosen = j;
        break;
      }
    }
    next[m] = chosen;
  }
  return next;
}

TaskSpec sample_task(int request_id, const ScenarioConfig& cfg,
                     RngStream& rng) {
  if (request_id == 0) {
    throw std::invalid_argument("sample_task: idle users have no task");
  }
  TaskSpec t;
  t.request_id = request_id;
  t.input_bits = rng.uniform(cfg.task_size_lo_bits, cfg.task_size_hi_bits);
  t.cycles = rng.uniform(cfg.task_cycles_lo, cfg.task_cycles_hi);
  t.latency_bound_s =
      rng.uniform(cfg.latency_bound_lo_s, cfg.latency_bound_hi_s);
  t.render_slope = rng.uniform(cfg.render_slope_lo, cfg.render_slope_hi);
  return t;
}

}  // namespace ince
