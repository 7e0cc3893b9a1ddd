#include "firedrift/rng.hpp"

namespace firedrift {

namespace {

std::uint64_t splitmix_finalize(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

}  // namespace

std::uint64_t Rng::next_u64() {
  state_ += 0x9E3779B97F4A7C15ULL;
  return splitmix_finalize(state_);
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * next_double();
}

std::uint64_t Rng::next_below(std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

int Rng::uniform_int(int lo, int hi) {
  return lo + static_cast<int>(next_below(
                  static_cast<std::uint64_t>(hi - lo) + 1));
}

bool Rng::bernoulli(double p) { return next_double() < p; }

Rng Rng::split(std::uint64_t stream) const {
  return Rng(mix64(seed_, stream));
}

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  // Two finalizer rounds over a Weyl-mixed combination give full avalanche;
  // this is a hash, not a cipher, which is all dataset seeding needs.
  std::uint64_t z = a ^ (b * 0x9E3779B97F4A7C15ULL + 0x7F4A7C15U);
  return splitmix_finalize(splitmix_finalize(z) + b);
}

}  // namespace firedrift
