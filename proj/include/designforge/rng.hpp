#pragma once

#include <cstdint>
#include <random>

namespace designforge {

// splitmix64: fast 64-bit mixer, used both for seeding substreams and for
// keyed one-shot draws (exposure ledger).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seeded RNG stream. Substreams are pure functions of (seed, tag), so
// per-trial / per-stage streams are reproducible regardless of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

  Rng substream(std::uint64_t tag) const {
    return Rng(splitmix64(seed_ ^ splitmix64(tag + 0x5851f42d4c957f2dULL)));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double next_double() {
    return (engine_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return next_double() < p;
  }

  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
  }

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }

  template <typename Vec>
  void shuffle(Vec& v) {
    std::shuffle(v.begin(), v.end(), engine_);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Keyed Bernoulli draw: a pure function of (seed, key, p). Same key always
// yields the same answer, independent of evaluation order.
inline bool keyed_bernoulli(std::uint64_t seed, std::uint64_t key, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  std::uint64_t h = splitmix64(splitmix64(key) ^ seed);
  return (h >> 11) * 0x1.0p-53 < p;
}

}  // namespace designforge
