#pragma once

#include <vector>

#include "gcstar/inference.hpp"

namespace gcstar {

struct McmcOptions {
  int iterations = 200000;
  int burn_in = 20000;
  int thin = 1;
  std::uint64_t seed = 1;
};

// Validation-oracle sampler: Metropolis-within-Gibbs with random-walk
// updates on the internal hyperparameters and blocked latent updates
// preconditioned by the Gaussian approximation at the hyper mode.  Step
// sizes adapt during burn-in only.  Small models only.
struct McmcResult {
  Mat hyper;    // kept draws x hyper_dim (internal scale)
  Mat latent;   // kept draws x latent_dim
  std::vector<double> hyper_acceptance;
  double latent_acceptance = 0.0;
};

McmcResult mcmc_reference(const DesignAssembly& asm_, const PriorSettings& priors,
                          const McmcOptions& opts = {});

// Batch-means Monte Carlo standard error of the chain mean.
double mcse_batch_means(const Vec& chain);

// Split-chain potential-scale-reduction diagnostic.
double split_rhat(const Vec& chain);

}  // namespace gcstar
