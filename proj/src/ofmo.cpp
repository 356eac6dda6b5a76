#include "ince/ofmo.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace ince {

std::vector<std::uint8_t> knapsack_ofmo(std::span<const double> scores,
                                        int capacity) {
  const int m_count = static_cast<int>(scores.size());
  capacity = std::max(0, std::min(capacity, m_count));
  std::vector<std::uint8_t> picks(m_count, 0);
  if (capacity == 0 || m_count == 0) return picks;

  // value[m][c]: best score sum over the first m users with c slots
  std::vector<std::vector<double>> value(
      m_count + 1, std::vector<double>(capacity + 1, 0.0));
  std::vector<std::vector<std::uint8_t>> take(
      m_count + 1, std::vector<std::uint8_t>(capacity + 1, 0));
  for (int m = 1; m <= m_count; ++m) {
    for (int c = 0; c <= capacity; ++c) {
      const double skip = value[m - 1][c];
      value[m][c] = skip;
      if (c >= 1) {
        const double with = value[m - 1][c - 1] + scores[m - 1];
        if (with > skip) {  // ties prefer exclusion
          value[m][c] = with;
          take[m][c] = 1;
        }
      }
    }
  }
  int c = capacity;
  for (int m = m_count; m >= 1; --m) {
    picks[m - 1] = take[m][c];
    c -= take[m][c];
  }
  return picks;
}

std::vector<std::uint8_t> brute_force_ofmo(std::span<const double> scores,
                                           int capacity) {
  const int m_count = static_cast<int>(scores.size());
  if (m_count > 20) {
    throw std::invalid_argument("brute_force_ofmo: instance too large");
  }
  capacity = std::max(0, std::min(capacity, m_count));
  std::uint32_t best_mask = 0;
  double best_value = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << m_count); ++mask) {
    if (std::popcount(mask) > capacity) continue;
    double v = 0.0;
    for (int m = 0; m < m_count; ++m) {
      if (mask & (1u << m)) v += scores[m];
    }
    if (v > best_value) {  // ascending masks: ties keep the lower-index set
      best_value = v;
      best_mask = mask;
    }
  }
  std::vector<std::uint8_t> picks(m_count, 0);
  for (int m = 0; m < m_count; ++m) picks[m] = (best_mask >> m) & 1u;
  return picks;
}

double selection_value(std::span<const double> scores,
                       std::span<const std::uint8_t> picks) {
  double v = 0.0;
  for (size_t m = 0; m < scores.size(); ++m) {
    if (picks[m]) v += scores[m];
  }
  return v;
}

}  // namespace ince
