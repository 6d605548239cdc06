#pragma once

#include "harfuse/types.hpp"

#include <cstdint>

namespace harfuse {

/// Splittable counter-based random stream.
///
/// Output i of a stream is mix64(key + i * gamma) (the splitmix64 sequence),
/// so a stream is a pure function of its key and draw index. fork(id) derives
/// a child key from the parent key and id only, never from the draw position;
/// forking the same id twice yields the same stream. Training code leans on
/// this to give every (seed, step, slot) tuple its own stream, independent of
/// how much randomness any other consumer used.
///
/// All sampling is implemented here from raw 64-bit draws; nothing routes
/// through std::<random> distributions, so sequences are identical across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Child stream addressed by `id`; independent of draws made so far.
  Rng fork(std::uint64_t id) const;

  std::uint64_t next_u64();

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform();

  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (two uniform draws per call).
  double normal();

  /// Index k with probability p[k]. p must satisfy the selection-probability
  /// invariants (validated by the caller); entries with p[k] == 0 are never
  /// returned.
  int categorical(const Vector& p);

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

/// splitmix64 finalizer; stateless 64-bit mix with full avalanche.
std::uint64_t mix64(std::uint64_t z);

}  // namespace harfuse
