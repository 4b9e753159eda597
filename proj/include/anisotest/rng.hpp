#pragma once

#include <cstdint>
#include <random>

namespace anisotest {

/// splitmix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

/// Seed for one unit of work, derived from the run's master seed.
///
/// Frozen algorithm: h = mix64(master ^ 0x6a09e667f3bcc909); then for each word w in
/// (scenario, pattern, replicate): h = mix64(h ^ (w + 0x9e3779b97f4a7c15 + (h << 6) + (h >> 2))).
/// Changing it changes every published result, so don't.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t scenario, std::uint64_t pattern,
                          std::uint64_t replicate);

/// Deterministic pseudo-random stream (64-bit Mersenne Twister).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  /// Independent child stream; the parent is not advanced.
  RngStream derive(std::uint64_t index) const { return RngStream(derive_seed(seed_, 0x5eed, index, 0)); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }
  std::uint64_t poisson(double mean);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace anisotest
