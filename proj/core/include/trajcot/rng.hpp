#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace trajcot {

/// Seeded generator whose output sequence is identical on every platform.
///
/// std::mt19937_64's raw output is fixed by the standard, but the standard
/// distributions are not, so bounded draws use rejection sampling here.
class PinnedRng {
 public:
  static constexpr std::string_view kAlgorithm = "fy-mt19937_64-rejection-v1";

  explicit PinnedRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). `bound` must be positive.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi);

  /// Uniform double in [0, 1) with 53 bits of precision.
  double unit();

  bool chance(double p) { return unit() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace trajcot
