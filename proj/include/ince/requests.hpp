#pragma once

#include <vector>

#include "ince/config.hpp"
#include "ince/rng.hpp"

namespace ince {

// Per-user request state: 0 = idle, f in {1..num_tasks} = requesting task f.
using RequestState = std::vector<int>;

// Row-stochastic (F+1)x(F+1) transition matrix:
//  - active -> idle with probability R
//  - active -> one of the next `neighborhood` tasks (cyclic) uniformly; if the
//    cycle wraps onto the idle state that mass is spread over the remaining
//    neighbors (or kept as a self-loop when none remain)
//  - idle -> task f with Zipf weight f^-delta, idle -> idle with the leftover R
std::vector<std::vector<double>> transition_matrix(const RequestParams& p);

RequestState initial_requests(int num_users);  // everyone idle

// Each user advances independently along its row.
RequestState step_requests(const RequestState& state,
                           const std::vector<std::vector<double>>& matrix,
                           RngStream& rng);

struct TaskSpec {
  int request_id = 0;
  double input_bits = 0.0;
  double cycles = 0.0;
  double latency_bound_s = 0.0;
  double render_slope = 1.0;

  double rendered_bits() const { return render_slope * input_bits; }
};

// Uniform draws from the configured ranges; request_id must be nonzero.
TaskSpec sample_task(int request_id, const ScenarioConfig& cfg, RngStream& rng);

}  // namespace ince
