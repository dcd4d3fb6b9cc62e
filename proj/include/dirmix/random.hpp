#pragma once

// Seedable generator with hand-written distributions, so that a given seed
// produces the same stream on every platform and standard library.
//
// Engine: std::mt19937_64. Per-task streams are seeded with
// splitmix64(seed ^ splitmix64(task_index)).

#include <cstdint>
#include <random>
#include <vector>

namespace dirmix {

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Independent stream for one task of a run.
  static Rng for_task(std::uint64_t seed, std::uint64_t task_index);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on {0, ..., n - 1}; n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal (Marsaglia polar method).
  double normal();
  /// Gamma(shape, 1) (Marsaglia-Tsang; shape < 1 via the U^{1/shape} boost).
  double gamma(double shape);
  /// k distinct values of {0, ..., n - 1} in random order (partial Fisher-Yates).
  std::vector<std::uint64_t> sample_without_replacement(std::uint64_t n, std::uint64_t k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dirmix
