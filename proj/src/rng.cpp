#include "harfuse/rng.hpp"

#include <cmath>

namespace harfuse {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kForkSalt = 0xD1B54A32D192ED03ULL;
}  // namespace

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) : key_(mix64(seed ^ kGolden)) {}

Rng Rng::fork(std::uint64_t id) const {
  Rng child(0);
  child.key_ = mix64(key_ ^ mix64(id * kGolden + kForkSalt));
  child.counter_ = 0;
  return child;
}

std::uint64_t Rng::next_u64() { return mix64(key_ + (++counter_) * kGolden); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  // u1 in (0, 1] so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

int Rng::categorical(const Vector& p) {
  const double u = uniform();
  double cum = 0.0;
  int last_positive = -1;
  for (int k = 0; k < p.size(); ++k) {
    if (p[k] > 0.0) last_positive = k;
    cum += p[k];
    if (u < cum) return k;
  }
  // Rounding in the cumulative sum can leave u just above it; fall back to
  // the last index that has positive mass.
  if (last_positive < 0) throw InternalError("categorical: no positive mass");
  return last_positive;
}

}  // namespace harfuse
