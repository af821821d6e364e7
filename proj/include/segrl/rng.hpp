#pragma once

#include <cstdint>
#include <random>

namespace segrl {

// Run-level generator for weight init, action sampling and minibatch
// shuffling. Always passed explicitly; nothing in the library owns a global.
using Rng = std::mt19937_64;

// SplitMix64 (Steele, Lea, Flood 2014). Environments use it because its
// output sequence is fixed by three constants and so golden frames are
// identical on every platform:
//   state += 0x9E3779B97F4A7C15
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next();
  // Uniform integer in [0, bound) using the high 32 bits; bound must be > 0.
  std::uint32_t below(std::uint32_t bound);

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace segrl
