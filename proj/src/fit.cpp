#include "gcstar/fit.hpp"

#include <cmath>
#include <limits>

#include "gcstar/errors.hpp"
#include "gcstar/likelihoods.hpp"

namespace gcstar {

double FitResult::lik_hyper_mean() const {
  if (!grid.layout.has_lik_hyper) return std::numeric_limits<double>::quiet_NaN();
  return hypers.front().mean_natural;
}

PointwiseLogLik pointwise_loglik(const DesignAssembly& asm_, const HyperGrid& grid,
                                 const PosteriorDraws& draws) {
  const int n_draws = static_cast<int>(draws.latent.rows());
  const int n_obs = static_cast<int>(asm_.observed_rows.size());
  PointwiseLogLik pll;
  pll.values = Mat(n_draws, n_obs);
  for (int s = 0; s < n_draws; ++s) {
    const Vec psi = draws.latent.row(s).transpose();
    const Vec eta = asm_.A_obs * psi + asm_.offset_obs;
    const double hyper = grid.layout.has_lik_hyper ? std::exp(draws.hyper(s, 0)) : 0.0;
    for (int i = 0; i < n_obs; ++i) {
      pll.values(s, i) = loglik_value(asm_.likelihood, asm_.y_obs[i], eta[i], hyper);
    }
  }
  return pll;
}

FitResult fit_model(const DesignAssembly& asm_, const PriorSettings& priors,
                    const FitOptions& opts) {
  FitResult fit;
  fit.grid = explore_hypers(asm_, priors, opts.explore);
  fit.latent = latent_marginals(fit.grid);
  fit.hypers = hyper_marginals(fit.grid);

  fit.diagnostics.grid_points = static_cast<int>(fit.grid.points.size());
  fit.diagnostics.dropped_points = fit.grid.dropped_points;
  for (const HyperGridPoint& p : fit.grid.points) {
    fit.diagnostics.clamp_events += p.approx.clamp_events;
    fit.diagnostics.newton_iters_total += p.approx.newton_iters;
    fit.diagnostics.all_converged &= p.approx.converged;
  }

  Rng rng(opts.seed, 0x66697464);
  fit.draws = posterior_sample(fit.grid, asm_, opts.n_pred_draws, rng);

  const PointwiseLogLik pll = pointwise_loglik(asm_, fit.grid, fit.draws);
  // DIC plug-in: latent at its posterior mixture mean, hypers at the modal
  // grid point.
  Vec psi_bar = Vec::Zero(asm_.latent_dim);
  for (int j = 0; j < asm_.latent_dim; ++j) psi_bar[j] = fit.latent[static_cast<size_t>(j)].mean;
  const Vec eta_bar = asm_.A_obs * psi_bar + asm_.offset_obs;
  const double hyper_mode =
      fit.grid.layout.has_lik_hyper ? std::exp(fit.grid.mode_point().theta.z[0]) : 0.0;
  double plug_in = 0.0;
  for (int i = 0; i < eta_bar.size(); ++i) {
    plug_in += loglik_value(asm_.likelihood, asm_.y_obs[i], eta_bar[i], hyper_mode);
  }
  fit.criteria.dic = dic(pll, plug_in);
  fit.criteria.waic = waic(pll);
  fit.criteria.cpo = cpo_ls(pll);

  fit.predictions = predict_counts(fit.grid, asm_, fit.draws, rng);
  return fit;
}

}  // namespace gcstar
