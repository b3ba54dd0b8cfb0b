#pragma once

#include "gcstar/criteria.hpp"
#include "gcstar/inference.hpp"

namespace gcstar {

struct FitOptions {
  ExploreOptions explore;
  int n_pred_draws = 1000;
  std::uint64_t seed = 42;
};

struct FitDiagnostics {
  int grid_points = 0;
  int dropped_points = 0;
  int clamp_events = 0;
  int newton_iters_total = 0;
  bool all_converged = true;
};

struct CriteriaValues {
  DicResult dic;
  WaicResult waic;
  CpoResult cpo;
};

struct FitResult {
  HyperGrid grid;
  std::vector<LatentMarginal> latent;
  std::vector<HyperMarginal> hypers;
  PosteriorDraws draws;
  CriteriaValues criteria;
  std::vector<PredictionRow> predictions;
  FitDiagnostics diagnostics;

  // Posterior mean of the GC dispersion (or NaN when the likelihood
  // carries no hyperparameter).
  double lik_hyper_mean() const;
};

// Full pipeline: hyper exploration, marginals, joint draws, criteria,
// and predictions for the assembly's missing-response rows.
FitResult fit_model(const DesignAssembly& asm_, const PriorSettings& priors,
                    const FitOptions& opts = {});

// Pointwise log-likelihood matrix over observed rows for criteria.
PointwiseLogLik pointwise_loglik(const DesignAssembly& asm_, const HyperGrid& grid,
                                 const PosteriorDraws& draws);

}  // namespace gcstar
