#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace ince {

// 64-bit FNV-1a; used for stream labels, config hashes and run ids.
constexpr std::uint64_t fnv1a64(std::string_view s,
                                std::uint64_t h = 14695981039346656037ull) {
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// One deterministic generator stream. Draw helpers are hand-rolled instead of
// std::*_distribution so sequences are identical across standard libraries.
class RngStream {
 public:
  RngStream() : engine_(0) {}
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  // [0, 1)
  double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive bounds
  int uniform_int(int lo, int hi) {
    const int span = hi - lo + 1;
    int v = lo + static_cast<int>(uniform() * span);
    return v > hi ? hi : v;
  }

  // standard normal, Box-Muller with cached spare
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Named independent streams: consuming one never shifts another.
struct RngStreams {
  RngStream channel;
  RngStream requests;
  RngStream tasks;
  RngStream policy_init;
  RngStream policy_sample;

  static RngStreams make(std::uint64_t seed) {
    RngStreams s;
    s.channel = RngStream(splitmix64(seed ^ fnv1a64("channel")));
    s.requests = RngStream(splitmix64(seed ^ fnv1a64("requests")));
    s.tasks = RngStream(splitmix64(seed ^ fnv1a64("tasks")));
    s.policy_init = RngStream(splitmix64(seed ^ fnv1a64("policy-init")));
    s.policy_sample = RngStream(splitmix64(seed ^ fnv1a64("policy-sample")));
    return s;
  }
};

}  // namespace ince
