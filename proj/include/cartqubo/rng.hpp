#pragma once

#include <cstdint>

namespace cartqubo {

/// SplitMix64 step. Used for seeding and for stateless per-index hashing.
std::uint64_t splitmix64(std::uint64_t& state);

/// Stateless mix of a single value (one SplitMix64 round on `x`).
std::uint64_t mix64(std::uint64_t x);

/// xoshiro256** with SplitMix64 seeding. All distribution sampling below is
/// implemented here rather than through <random> distributions, whose output
/// is implementation-defined, so generated datasets are identical on every
/// platform for a given seed.
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer on [0, n). Rejection sampling, unbiased.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p);
  /// Marsaglia polar method; the spare deviate is cached.
  double normal();
  double normal(double mean, double sd);
  double lognormal(double meanlog, double sdlog);
  /// Marsaglia-Tsang; shape < 1 handled by the boost U^(1/shape).
  double gamma(double shape, double scale);

private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cartqubo
