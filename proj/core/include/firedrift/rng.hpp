#pragma once

#include <cstdint>

namespace firedrift {

// Splittable SplitMix64 stream. Child streams are derived from the
// construction seed and an explicit stream id, never from the parent's
// consumption position, so generation order can be re-arranged (or
// parallelised) without changing any draw. No std:: distribution is used
// anywhere: the double/int mappings below are fixed bit manipulations, which
// keeps seeded datasets byte-identical across platforms and stdlib versions.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53 mantissa bits.
  double next_double();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi);

  // Uniform in [0, n), Lemire multiply-shift (n > 0).
  std::uint64_t next_below(std::uint64_t n);

  // Uniform integer in [lo, hi], both ends inclusive.
  int uniform_int(int lo, int hi);

  bool bernoulli(double p);

  // Independent child stream; depends only on the construction seed and
  // `stream`, not on how much the parent has already consumed.
  Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

// Stateless hash combine used to derive per-entity seeds from a global seed.
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

}  // namespace firedrift
