#pragma once

#include <cstdint>
#include <string>

#include "gcstar/rng.hpp"

namespace gcstar {

enum class LikelihoodKind { GC, Poisson, NegBin, GenPoisson, Gaussian };

LikelihoodKind likelihood_kind_from_string(const std::string& name);
std::string to_string(LikelihoodKind kind);
// GC, NegBin and GenPoisson carry one likelihood hyperparameter.
bool likelihood_has_hyper(LikelihoodKind kind);

// Log-likelihood and its first two derivatives in the linear predictor.
struct LoglikEval {
  double loglik = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  bool d2_clamped = false;  // curvature was raised to the -1e-10 ceiling
};

// y ~ GC(alpha, alpha*exp(eta)); the waiting-time regression link.
// d2 comes from Richardson-extrapolated central differences of the
// analytic d1 (step 1e-5).
LoglikEval gc_loglik_eta(double y, double eta, double alpha);

// y ~ Poisson(exp(eta)).
LoglikEval poisson_loglik_eta(double y, double eta);

// NB2: mean exp(eta), variance mu + mu^2/size.
LoglikEval negbin_loglik_eta(double y, double eta, double size);

// Consul generalized Poisson, mean-parameterized: theta = exp(eta)*(1-phi),
// pmf theta*(theta+phi*y)^{y-1} e^{-theta-phi*y} / y!.
LoglikEval genpoisson_loglik_eta(double y, double eta, double phi);

// Unit-variance Gaussian observation; makes the whole inference pipeline
// exact and testable in closed form.
LoglikEval gaussian_loglik_eta(double y, double eta);

// Dispatch on kind; hyper is ignored by Poisson/Gaussian.
LoglikEval loglik_eta(LikelihoodKind kind, double y, double eta, double hyper);

// Log-likelihood value alone, skipping the derivative machinery (the GC
// curvature costs several incomplete-gamma evaluations).
double loglik_value(LikelihoodKind kind, double y, double eta, double hyper);

// One predictive draw of y given eta (and hyper where the kind has one).
double sample_observation(LikelihoodKind kind, double eta, double hyper, Rng& rng);

}  // namespace gcstar
