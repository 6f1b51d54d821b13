#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace msb::core {

std::uint64_t splitmix64(std::uint64_t x);

// Seeded generator whose derived draws are identical on every platform:
// std::mt19937_64 output is standardized, the std distributions are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  // Uniform integer in [0, n); n > 0.
  std::size_t below(std::size_t n);
  // k distinct indices from [0, n) in ascending order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace msb::core
