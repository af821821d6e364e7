#include "segrl/rng.hpp"

namespace segrl {

std::uint64_t SplitMix64::next() {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint32_t SplitMix64::below(std::uint32_t bound) {
  const std::uint64_t hi = next() >> 32;
  return static_cast<std::uint32_t>((hi * bound) >> 32);
}

}  // namespace segrl
