#include "rng.hpp"

#include <cmath>

namespace ginr {

namespace {
constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

uint64_t splitmix_finish(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace

uint64_t Rng::next_u64() {
  state_ += kGolden;
  return splitmix_finish(state_);
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * next_double() - 1.0;
    v = 2.0 * next_double() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double r = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * r;
  have_spare_ = true;
  return u * r;
}

uint64_t Rng::mix(uint64_t seed, uint64_t tag) {
  return splitmix_finish(seed ^ splitmix_finish(tag + kGolden));
}

}  // namespace ginr
