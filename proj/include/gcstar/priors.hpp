#pragma once

namespace gcstar {

// PC prior for the GC dispersion: exponential with rate lambda on the
// root-KLD distance d(alpha) from the Poisson base model alpha=1, with
// mass split evenly between the two branches alpha<1 and alpha>1.
struct PcAlphaPrior {
  double lambda = 1.0;

  void validate() const;
};

// d(alpha) = sqrt(-2 log Gamma(alpha) + 2 (alpha-1) psi(alpha)); zero at 1.
double pc_alpha_distance(double alpha);
double pc_alpha_log_density(double alpha, const PcAlphaPrior& prior);

// PC prior for a precision tau: sigma = tau^{-1/2} is exponential with
// rate lambda = -ln(a_tail)/u_sigma, so P(sigma > u_sigma) = a_tail.
struct PcPrecisionPrior {
  double u_sigma = 1.0;
  double a_tail = 0.01;

  void validate() const;
  double lambda() const;
  // P(sigma > u); equals a_tail at u = u_sigma by construction.
  double sigma_tail_prob(double u) const;
};

double pc_precision_log_density(double tau, const PcPrecisionPrior& prior);

// N(0, variance) prior for linear fixed effects (paper default variance 100).
double gaussian_fixed_log_density(double b, double variance = 100.0);

}  // namespace gcstar
