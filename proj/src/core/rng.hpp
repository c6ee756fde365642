#pragma once

#include <cstdint>

namespace ginr {

// Deterministic counter-style generator (splitmix64 core). The integer stream
// is bit-exact across platforms; derived doubles use only IEEE-exact ops,
// except for the log/sqrt inside the Gaussian transform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64();
  // uniform in [0, 1), 53 mantissa bits
  double next_double();
  // standard normal, Marsaglia polar method (pairs cached)
  double next_gaussian();

  // stable sub-seed derivation for independent streams
  static uint64_t mix(uint64_t seed, uint64_t tag);

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ginr
