#pragma once

#include <cstdint>

namespace gcstar {

// Shared accuracy knobs for iterative numeric routines.
struct Tolerance {
  double rel_tol = 1e-14;
  double abs_tol = 0.0;
  std::int64_t max_iter = 4000;

  void validate() const;
};

// Regularized lower incomplete gamma G(a,x) = gamma(a,x)/Gamma(a), in [0,1].
// Power series for x < a+1, continued fraction otherwise.
double reg_lower_gamma(double a, double x, const Tolerance& tol = {});

// Regularized upper incomplete gamma Q(a,x) = 1 - G(a,x).
double reg_upper_gamma(double a, double x, const Tolerance& tol = {});

// log G(a,x) and log Q(a,x), evaluated natively in log space so extreme
// tails keep full relative accuracy.
double log_reg_lower_gamma(double a, double x, const Tolerance& tol = {});
double log_reg_upper_gamma(double a, double x, const Tolerance& tol = {});

// log(G(a_lo,x) - G(a_hi,x)) for 0 < a_lo < a_hi.  The difference is
// nonnegative because G is decreasing in a; returns -inf on underflow.
// Switches to upper-tail differences when both regularized values
// exceed 1/2.
double log_reg_gamma_diff(double a_lo, double a_hi, double x,
                          const Tolerance& tol = {});

// Derivative of G(a,x) in x: x^{a-1} e^{-x} / Gamma(a), as a log.
double log_reg_lower_gamma_dx(double a, double x);

// Digamma psi(x), x > 0.  Absolute error below 1e-12.
double digamma(double x);

// Trigamma psi'(x), x > 0.
double trigamma(double x);

}  // namespace gcstar
