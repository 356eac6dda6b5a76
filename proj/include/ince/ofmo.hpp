#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ince {

// Capacity-feasible offloading-mode selection from per-user preference
// scores: maximize the selected score sum with at most `capacity` users.
// Dynamic program over (user, capacity) with backtracking; ties prefer
// exclusion, so equal-score conflicts resolve to the lower user index.
std::vector<std::uint8_t> knapsack_ofmo(std::span<const double> scores,
                                        int capacity);

// Exhaustive oracle for small instances (<= 20 users); same tie rule.
std::vector<std::uint8_t> brute_force_ofmo(std::span<const double> scores,
                                           int capacity);

double selection_value(std::span<const double> scores,
                       std::span<const std::uint8_t> picks);

}  // namespace ince
