#include "gcstar/gc.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gcstar/errors.hpp"
#include "gcstar/quadrature.hpp"

namespace gcstar {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void GCParams::validate() const {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(t) ||
      alpha <= 0.0 || beta <= 0.0 || t <= 0.0) {
    throw DomainError("GCParams: need finite alpha, beta, t > 0");
  }
}

DispersionClass classify_dispersion(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw DomainError("classify_dispersion: need alpha > 0");
  }
  if (alpha < 1.0) return DispersionClass::Over;
  if (alpha > 1.0) return DispersionClass::Under;
  return DispersionClass::Equi;
}

double gc_log_pmf(std::int64_t n, const GCParams& p, const Tolerance& tol) {
  p.validate();
  if (n < 0) throw DomainError("gc_log_pmf: need n >= 0");
  const double x = p.beta * p.t;
  if (n == 0) {
    // G(0,x) = 1, so P(Y=0) = 1 - G(alpha, x).
    return log_reg_upper_gamma(p.alpha, x, tol);
  }
  return log_reg_gamma_diff(static_cast<double>(n) * p.alpha,
                            static_cast<double>(n + 1) * p.alpha, x, tol);
}

double gc_pmf(std::int64_t n, const GCParams& p, const Tolerance& tol) {
  return std::exp(gc_log_pmf(n, p, tol));
}

namespace {

TailSumResult tail_sum(const GCParams& p, double eps, std::int64_t max_terms,
                       bool second_moment) {
  p.validate();
  if (!(eps > 0.0)) throw DomainError("gc tail sum: need eps > 0");
  const double x = p.beta * p.t;
  TailSumResult r;
  double prev = std::numeric_limits<double>::infinity();
  for (std::int64_t k = 1; k <= max_terms; ++k) {
    const double g = reg_lower_gamma(static_cast<double>(k) * p.alpha, x);
    const double term = second_moment ? (2.0 * static_cast<double>(k) - 1.0) * g : g;
    r.value += term;
    r.terms = k;
    if (term < eps) {
      // G(k*alpha, x) decays at least geometrically past the mean, so the
      // last observed ratio bounds the dropped tail.
      const double ratio = prev > 0.0 ? std::min(term / prev, 0.999) : 0.0;
      r.truncation_bound = term * ratio / (1.0 - ratio);
      return r;
    }
    prev = term;
  }
  throw TruncationError(
      "gc tail sum: " + std::to_string(max_terms) +
      " terms without reaching eps; beta/alpha too large for direct summation");
}

}  // namespace

TailSumResult gc_mean(const GCParams& p, double eps, std::int64_t max_terms) {
  return tail_sum(p, eps, max_terms, false);
}

TailSumResult gc_variance(const GCParams& p, double eps, std::int64_t max_terms) {
  const TailSumResult m = tail_sum(p, eps, max_terms, false);
  TailSumResult r = tail_sum(p, eps, max_terms, true);
  r.value -= m.value * m.value;
  r.truncation_bound += 2.0 * m.value * m.truncation_bound;
  return r;
}

std::int64_t gc_sample(const GCParams& p, Rng& rng) {
  p.validate();
  std::int64_t n = 0;
  double arrival = rng.gamma(p.alpha, p.beta);
  while (arrival <= p.t) {
    ++n;
    arrival += rng.gamma(p.alpha, p.beta);
  }
  return n;
}

double gamma_hazard(double u, double alpha, double rate) {
  if (!(u > 0.0) || !(alpha > 0.0) || !(rate > 0.0)) {
    throw DomainError("gamma_hazard: need u, alpha, rate > 0");
  }
  // Density/survival ratio, in log space.
  const double log_f = alpha * std::log(rate) + (alpha - 1.0) * std::log(u) -
                       rate * u - std::lgamma(alpha);
  const double log_s = log_reg_upper_gamma(alpha, rate * u);
  const double h_ratio = std::exp(log_f - log_s);

  // Cross-check: 1/h(u) = int_0^inf e^{-rate*v} (1+v/u)^{alpha-1} dv.
  const auto integrand = [u, alpha, rate](double v) {
    return std::exp(-rate * v + (alpha - 1.0) * std::log1p(v / u));
  };
  const QuadResult q = integrate_semi_infinite(integrand,
                                               {.rel_tol = 1e-11, .abs_tol = 1e-13,
                                                .max_iter = 4000});
  const double h_int = 1.0 / q.value;
  if (std::fabs(h_int - h_ratio) > 1e-8 * std::max(1.0, std::fabs(h_ratio))) {
    throw ConvergenceError("gamma_hazard: integral and ratio forms disagree: " +
                           std::to_string(h_int) + " vs " + std::to_string(h_ratio));
  }
  return h_ratio;
}

}  // namespace gcstar
