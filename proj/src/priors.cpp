#include "gcstar/priors.hpp"

#include <cmath>

#include "gcstar/errors.hpp"
#include "gcstar/special.hpp"

namespace gcstar {

void PcAlphaPrior::validate() const {
  if (!(lambda > 0.0)) throw DomainError("PcAlphaPrior: need lambda > 0");
}

double pc_alpha_distance(double alpha) {
  if (!(alpha > 0.0)) throw DomainError("pc_alpha_distance: need alpha > 0");
  const double bracket =
      -2.0 * std::lgamma(alpha) + 2.0 * (alpha - 1.0) * digamma(alpha);
  // Rounding can leave a tiny negative near alpha=1; the true value is >= 0.
  return std::sqrt(std::max(bracket, 0.0));
}

double pc_alpha_log_density(double alpha, const PcAlphaPrior& prior) {
  prior.validate();
  if (!(alpha > 0.0)) throw DomainError("pc_alpha_log_density: need alpha > 0");
  const double d = pc_alpha_distance(alpha);
  // |d'(alpha)| = |(alpha-1) psi'(alpha) / d(alpha)|, with the 0/0 limit
  // sqrt(psi'(1)) at the base model.
  double log_jac;
  if (d < 1e-8) {
    log_jac = 0.5 * std::log(trigamma(1.0));
  } else {
    log_jac = std::log(std::fabs(alpha - 1.0) * trigamma(alpha) / d);
  }
  // The two branches alpha<1 and alpha>1 each map onto the full distance
  // scale, so each carries half the exponential mass.
  return std::log(0.5 * prior.lambda) - prior.lambda * d + log_jac;
}

void PcPrecisionPrior::validate() const {
  if (!(u_sigma > 0.0) || !(a_tail > 0.0) || !(a_tail < 1.0)) {
    throw DomainError("PcPrecisionPrior: need u_sigma > 0 and a_tail in (0,1)");
  }
}

double PcPrecisionPrior::lambda() const {
  validate();
  return -std::log(a_tail) / u_sigma;
}

double PcPrecisionPrior::sigma_tail_prob(double u) const {
  return std::exp(-lambda() * u);
}

double pc_precision_log_density(double tau, const PcPrecisionPrior& prior) {
  prior.validate();
  if (!(tau > 0.0)) throw DomainError("pc_precision_log_density: need tau > 0");
  const double lam = prior.lambda();
  return std::log(0.5 * lam) - 1.5 * std::log(tau) - lam / std::sqrt(tau);
}

double gaussian_fixed_log_density(double b, double variance) {
  if (!std::isfinite(b) || !(variance > 0.0)) {
    throw DomainError("gaussian_fixed_log_density: need finite b, variance > 0");
  }
  return -0.5 * std::log(2.0 * 3.14159265358979323846 * variance) -
         0.5 * b * b / variance;
}

}  // namespace gcstar
