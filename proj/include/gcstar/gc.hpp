#pragma once

#include <cstdint>

#include "gcstar/rng.hpp"
#include "gcstar/special.hpp"

namespace gcstar {

// Gamma-count law: counts in (0,t] of a renewal process whose waiting
// times are iid Gamma(alpha, beta).  alpha is the dispersion parameter
// (Poisson at alpha=1), beta the event rate.
struct GCParams {
  double alpha = 1.0;
  double beta = 1.0;
  double t = 1.0;

  void validate() const;
};

enum class DispersionClass { Over, Equi, Under };

DispersionClass classify_dispersion(double alpha);

// P(Y=n) = G(n*alpha, beta*t) - G((n+1)*alpha, beta*t), with G(0,x) := 1.
double gc_log_pmf(std::int64_t n, const GCParams& p, const Tolerance& tol = {});
double gc_pmf(std::int64_t n, const GCParams& p, const Tolerance& tol = {});

// Truncated tail sums.  K stops at the first index with the summand below
// eps; truncation_bound is a geometric-ratio bound on the dropped tail.
struct TailSumResult {
  double value = 0.0;
  double truncation_bound = 0.0;
  std::int64_t terms = 0;
};

// E(Y) = sum_{k>=1} G(k*alpha, beta*t).
TailSumResult gc_mean(const GCParams& p, double eps = 1e-12,
                      std::int64_t max_terms = 100000);
// Var(Y) from E(Y^2) = sum_{k>=1} (2k-1) G(k*alpha, beta*t).
TailSumResult gc_variance(const GCParams& p, double eps = 1e-12,
                          std::int64_t max_terms = 100000);

// Exact draw via the renewal construction: accumulate Gamma(alpha,beta)
// arrivals until the window t is exceeded.
std::int64_t gc_sample(const GCParams& p, Rng& rng);

// Hazard of the Gamma(alpha, rate) waiting time at elapsed time u,
// computed as density/survival and cross-checked against the
// semi-infinite integral representation 1/h(u) = int_0^inf
// e^{-rate*v} (1+v/u)^{alpha-1} dv; the two must agree to 1e-8.
double gamma_hazard(double u, double alpha, double rate);

}  // namespace gcstar
