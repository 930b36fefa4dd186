#pragma once

// Seeded random numbers that reproduce across platforms and standard
// libraries. The engine is std::mt19937_64, whose output sequence is fixed by
// the C++ standard (the 10000th draw from the default seed is
// 9981545732273789042). The distribution transforms are implemented here
// because std::*_distribution results are implementation-defined.

#include <cstdint>
#include <random>
#include <vector>

namespace beam {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound) by rejection; no modulo bias.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal by the Marsaglia polar method.
  double normal();

  /// Gamma(shape, 1) by Marsaglia-Tsang, with the shape < 1 boost.
  double gamma(double shape);

  /// Fisher-Yates permutation of 0..size-1.
  std::vector<std::int64_t> permutation(std::int64_t size);

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Derives an independent-looking seed from a base seed and a stream index (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace beam
