#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace sbsim {

// Every draw goes through the raw 64-bit engine output, never through
// std::*_distribution, whose algorithms differ between standard libraries.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64; uniform = (x >> 11) * 2^-53; seeds from splitmix64";

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Per-realization seeds: the i-th seed is the i-th splitmix64 output started from `master`.
inline std::vector<std::uint64_t> expand_seeds(std::uint64_t master, std::size_t count) {
  std::vector<std::uint64_t> seeds;
  seeds.reserve(count);
  std::uint64_t state = master;
  for (std::size_t i = 0; i < count; ++i) seeds.push_back(splitmix64(state));
  return seeds;
}

}  // namespace sbsim
