#pragma once

#include <cstdint>

namespace gcstar {

// Deterministic xoshiro256++ stream.  All samplers are implemented here
// rather than through <random> distributions so that results are identical
// across standard libraries; streams split from a master seed stay
// independent across (seed, stream) pairs.
class Rng {
public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  // Uniform on [0,1) with 53 random bits.
  double uniform();
  // Uniform on (0,1), never exactly zero.
  double uniform_pos();
  double uniform(double lo, double hi);

  // Standard normal (Box-Muller, cached second deviate).
  double normal();

  // Gamma(shape, rate) by Marsaglia-Tsang squeeze.
  double gamma(double shape, double rate);

  // Poisson(mean) by exponential-gap counting, chunked for large means.
  std::int64_t poisson(double mean);

  // Index in [0, n) from cumulative weights summing to 1.
  // (Caller supplies the prefix sums.)
  std::int64_t categorical_from_cdf(const double* cdf, std::int64_t n);

private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace gcstar
