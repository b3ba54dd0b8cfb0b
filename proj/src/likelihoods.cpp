#include "gcstar/likelihoods.hpp"

#include <cmath>
#include <limits>

#include "gcstar/errors.hpp"
#include "gcstar/gc.hpp"
#include "gcstar/special.hpp"

namespace gcstar {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kCurvatureCeiling = -1e-10;

void clamp_curvature(LoglikEval& e) {
  if (e.d2 > kCurvatureCeiling) {
    e.d2 = kCurvatureCeiling;
    e.d2_clamped = true;
  }
}

void check_count(double y) {
  if (!(y >= 0.0) || y != std::floor(y) || !std::isfinite(y)) {
    throw DomainError("count likelihood: y must be a nonnegative integer");
  }
}

// d/deta of the GC log-pmf at beta = alpha*exp(eta).  Uses
// dG(a,x)/dx = x^{a-1} e^{-x} / Gamma(a) and dx/deta = x.
double gc_d1(double y, double eta, double alpha, double log_pmf_val) {
  const double x = alpha * std::exp(eta);
  if (y == 0.0) {
    // log(1 - G(alpha,x)); derivative -x * g(alpha,x) / Q(alpha,x).
    return -std::exp(std::log(x) + log_reg_lower_gamma_dx(alpha, x) - log_pmf_val);
  }
  const double a_lo = y * alpha;
  const double a_hi = (y + 1.0) * alpha;
  const double t_lo = std::exp(std::log(x) + log_reg_lower_gamma_dx(a_lo, x) - log_pmf_val);
  const double t_hi = std::exp(std::log(x) + log_reg_lower_gamma_dx(a_hi, x) - log_pmf_val);
  return t_lo - t_hi;
}

}  // namespace

LikelihoodKind likelihood_kind_from_string(const std::string& name) {
  if (name == "gc" || name == "gammacount") return LikelihoodKind::GC;
  if (name == "poisson") return LikelihoodKind::Poisson;
  if (name == "negbin" || name == "nb") return LikelihoodKind::NegBin;
  if (name == "genpoisson" || name == "gp") return LikelihoodKind::GenPoisson;
  if (name == "gaussian") return LikelihoodKind::Gaussian;
  throw DomainError("unknown likelihood '" + name + "'");
}

std::string to_string(LikelihoodKind kind) {
  switch (kind) {
    case LikelihoodKind::GC: return "gc";
    case LikelihoodKind::Poisson: return "poisson";
    case LikelihoodKind::NegBin: return "negbin";
    case LikelihoodKind::GenPoisson: return "genpoisson";
    case LikelihoodKind::Gaussian: return "gaussian";
  }
  return "?";
}

bool likelihood_has_hyper(LikelihoodKind kind) {
  return kind == LikelihoodKind::GC || kind == LikelihoodKind::NegBin ||
         kind == LikelihoodKind::GenPoisson;
}

LoglikEval gc_loglik_eta(double y, double eta, double alpha) {
  check_count(y);
  if (!(alpha > 0.0) || !std::isfinite(eta)) {
    throw DomainError("gc_loglik_eta: need alpha > 0 and finite eta");
  }
  LoglikEval e;
  const double beta = alpha * std::exp(eta);
  if (!std::isfinite(beta) || beta <= 0.0) {
    // Overflowed rate: reject the point instead of erroring so line
    // searches and mode exploration can back off.
    e.loglik = kNegInf;
    e.d1 = 0.0;
    e.d2 = kCurvatureCeiling;
    e.d2_clamped = true;
    return e;
  }
  const GCParams p{alpha, beta, 1.0};
  e.loglik = gc_log_pmf(static_cast<std::int64_t>(y), p);
  if (e.loglik == kNegInf) {
    e.d1 = 0.0;
    e.d2 = kCurvatureCeiling;
    e.d2_clamped = true;
    return e;
  }
  e.d1 = gc_d1(y, eta, alpha, e.loglik);
  // Richardson-extrapolated central difference of d1; the analytic second
  // derivative would need d/da terms of the incomplete gamma.
  const double h = 1e-5;
  auto d1_at = [y, alpha](double et) {
    const GCParams q{alpha, alpha * std::exp(et), 1.0};
    const double lp = gc_log_pmf(static_cast<std::int64_t>(y), q);
    return gc_d1(y, et, alpha, lp);
  };
  const double d_h = (d1_at(eta + h) - d1_at(eta - h)) / (2.0 * h);
  const double d_h2 = (d1_at(eta + 0.5 * h) - d1_at(eta - 0.5 * h)) / h;
  e.d2 = (4.0 * d_h2 - d_h) / 3.0;
  clamp_curvature(e);
  return e;
}

LoglikEval poisson_loglik_eta(double y, double eta) {
  check_count(y);
  LoglikEval e;
  const double mu = std::exp(eta);
  e.loglik = y * eta - mu - std::lgamma(y + 1.0);
  e.d1 = y - mu;
  e.d2 = -mu;
  clamp_curvature(e);
  return e;
}

LoglikEval negbin_loglik_eta(double y, double eta, double size) {
  check_count(y);
  if (!(size > 0.0)) throw DomainError("negbin_loglik_eta: need size > 0");
  LoglikEval e;
  const double mu = std::exp(eta);
  e.loglik = std::lgamma(y + size) - std::lgamma(size) - std::lgamma(y + 1.0) +
             size * std::log(size) + y * eta - (size + y) * std::log(size + mu);
  e.d1 = size * (y - mu) / (size + mu);
  e.d2 = -(size + y) * size * mu / ((size + mu) * (size + mu));
  clamp_curvature(e);
  return e;
}

LoglikEval genpoisson_loglik_eta(double y, double eta, double phi) {
  check_count(y);
  if (!(phi >= 0.0) || !(phi < 1.0)) {
    throw DomainError("genpoisson_loglik_eta: need phi in [0,1)");
  }
  const double theta = std::exp(eta) * (1.0 - phi);
  const double base = theta + phi * y;
  if (!(base > 0.0)) {
    throw DomainError("genpoisson_loglik_eta: theta + phi*y must be positive");
  }
  LoglikEval e;
  e.loglik = std::log(theta) + (y - 1.0) * std::log(base) - theta - phi * y -
             std::lgamma(y + 1.0);
  e.d1 = 1.0 - theta + theta * (y - 1.0) / base;
  e.d2 = theta * (-1.0 + (y - 1.0) * phi * y / (base * base));
  clamp_curvature(e);
  return e;
}

LoglikEval gaussian_loglik_eta(double y, double eta) {
  if (!std::isfinite(y)) throw DomainError("gaussian_loglik_eta: y must be finite");
  LoglikEval e;
  const double r = y - eta;
  e.loglik = -0.5 * r * r - 0.9189385332046727;  // -log(sqrt(2 pi))
  e.d1 = r;
  e.d2 = -1.0;
  return e;
}

LoglikEval loglik_eta(LikelihoodKind kind, double y, double eta, double hyper) {
  switch (kind) {
    case LikelihoodKind::GC: return gc_loglik_eta(y, eta, hyper);
    case LikelihoodKind::Poisson: return poisson_loglik_eta(y, eta);
    case LikelihoodKind::NegBin: return negbin_loglik_eta(y, eta, hyper);
    case LikelihoodKind::GenPoisson: return genpoisson_loglik_eta(y, eta, hyper);
    case LikelihoodKind::Gaussian: return gaussian_loglik_eta(y, eta);
  }
  throw DomainError("loglik_eta: bad kind");
}

double loglik_value(LikelihoodKind kind, double y, double eta, double hyper) {
  if (kind == LikelihoodKind::GC) {
    check_count(y);
    const double beta = hyper * std::exp(eta);
    if (!std::isfinite(beta) || beta <= 0.0) return kNegInf;
    const GCParams p{hyper, beta, 1.0};
    return gc_log_pmf(static_cast<std::int64_t>(y), p);
  }
  return loglik_eta(kind, y, eta, hyper).loglik;
}

double sample_observation(LikelihoodKind kind, double eta, double hyper, Rng& rng) {
  const double mu = std::exp(eta);
  switch (kind) {
    case LikelihoodKind::GC: {
      const GCParams p{hyper, hyper * mu, 1.0};
      return static_cast<double>(gc_sample(p, rng));
    }
    case LikelihoodKind::Poisson:
      return static_cast<double>(rng.poisson(mu));
    case LikelihoodKind::NegBin: {
      // Poisson-gamma mixture.
      const double lambda = rng.gamma(hyper, hyper / mu);
      return static_cast<double>(rng.poisson(lambda));
    }
    case LikelihoodKind::GenPoisson: {
      // Inversion on the pmf; support effectively bounded near the mean.
      const double u = rng.uniform();
      double cdf = 0.0;
      const std::int64_t cap = static_cast<std::int64_t>(20.0 * mu + 200.0);
      for (std::int64_t k = 0; k <= cap; ++k) {
        cdf += std::exp(genpoisson_loglik_eta(static_cast<double>(k), eta, hyper).loglik);
        if (u < cdf) return static_cast<double>(k);
      }
      return static_cast<double>(cap);
    }
    case LikelihoodKind::Gaussian:
      return eta + rng.normal();
  }
  throw DomainError("sample_observation: bad kind");
}

}  // namespace gcstar
