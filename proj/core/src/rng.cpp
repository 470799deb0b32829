#include "trajcot/rng.hpp"

#include <limits>

#include "trajcot/error.hpp"

namespace trajcot {

std::uint64_t PinnedRng::below(std::uint64_t bound) {
  if (bound == 0) throw ValidationError("PinnedRng::below: bound must be positive");
  // Largest multiple of bound that fits; draws at or above it are rejected.
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % bound;
}

std::int64_t PinnedRng::between(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw ValidationError("PinnedRng::between: empty range");
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(below(span));
}

double PinnedRng::unit() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

}  // namespace trajcot
