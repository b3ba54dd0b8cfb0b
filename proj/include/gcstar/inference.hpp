#pragma once

#include <Eigen/SparseCholesky>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gcstar/model.hpp"
#include "gcstar/priors.hpp"
#include "gcstar/rng.hpp"

namespace gcstar {

// Hyperparameter priors; taus fall back to the default unless a block
// name is given an override.
struct PriorSettings {
  PcAlphaPrior alpha_prior;                      // GC dispersion
  PcPrecisionPrior default_tau_prior;            // every penalized block
  std::map<std::string, PcPrecisionPrior> tau_overrides;
  // NB size reuses the PC-precision form (sigma = size^{-1/2}); the GP
  // dispersion gets an exponential tail P(phi > 1) = 0.01.  Neither is
  // stated by the reference material, so both are surfaced in metadata.
  PcPrecisionPrior nb_size_prior;
  double gp_phi_rate = 4.605170185988091;  // -ln(0.01)

  const PcPrecisionPrior& tau_prior_for(const std::string& block_name) const;
};

// Internal-scale hyperparameter vector: log likelihood-hyper first (when
// the likelihood has one), then log tau per penalized block in layout
// order.
struct HyperLayout {
  bool has_lik_hyper = false;
  std::vector<std::string> names;

  int dim() const { return static_cast<int>(names.size()); }
  static HyperLayout for_assembly(const DesignAssembly& asm_);
};

struct HyperPoint {
  Vec z;
};

// Extract natural-scale values from an internal point.
double lik_hyper_value(const HyperLayout& layout, const HyperPoint& theta);
Vec tau_values(const HyperLayout& layout, const HyperPoint& theta);

// Joint log density log pi(psi, theta, y) up to a theta-independent
// constant: likelihood + IGMRF blocks with generalized determinants +
// fixed-effect Gaussian priors + hyperpriors on the internal scale.
double log_joint(const Vec& psi, const HyperPoint& theta, const DesignAssembly& asm_,
                 const PriorSettings& priors);
// Hyperprior part alone (internal scale, Jacobians included).
double log_hyper_prior(const HyperPoint& theta, const DesignAssembly& asm_,
                       const PriorSettings& priors, const HyperLayout& layout);

struct NewtonOptions {
  double tol = 1e-6;
  int max_iter = 50;
};

// Gaussian approximation of pi(psi | theta, y) at its constrained mode.
struct GaussianApprox {
  Vec mode;
  std::shared_ptr<Eigen::SimplicialLLT<SparseMat>> factor;
  double log_det_h = 0.0;       // log det of the negative Hessian
  double log_det_corr = 0.0;    // + log det(Ac H^{-1} Ac') under constraints
  Mat v;                        // H^{-1} Ac'
  Mat m_inv;                    // (Ac H^{-1} Ac')^{-1}
  bool converged = false;
  int newton_iters = 0;
  int clamp_events = 0;
  Vec marginal_sd;              // constraint-corrected; filled by finalize

  bool has_marginals() const { return marginal_sd.size() > 0; }
  // Solve H x = b through the stored factor.
  Vec solve(const Vec& b) const;
  // Apply the kriging constraint correction x <- x - V M^{-1} (Ac x).
  void constrain(Vec& x, const DesignAssembly& asm_) const;
};

GaussianApprox latent_gaussian_approx(const HyperPoint& theta, const DesignAssembly& asm_,
                                      const PriorSettings& priors,
                                      const NewtonOptions& opts = {},
                                      const Vec* warm_start = nullptr);

// Column-solve marginal variances (constraint-corrected).
void finalize_marginals(GaussianApprox& approx, const DesignAssembly& asm_);

// Laplace-ratio approximation of log pi(theta | y), up to a constant.
double hyper_log_posterior(const HyperPoint& theta, const GaussianApprox& approx,
                           const DesignAssembly& asm_, const PriorSettings& priors);

enum class ExploreMode { Auto, Grid, Ccd, EmpiricalBayes };

struct ExploreOptions {
  ExploreMode mode = ExploreMode::Auto;
  double grid_step = 0.75;
  double log_drop = 6.0;
  double ccd_f0 = 1.1;
  int max_points = 500;
  int nm_restarts = 3;
  NewtonOptions newton;
};

struct HyperGridPoint {
  HyperPoint theta;
  double log_post = 0.0;
  double weight = 0.0;
  GaussianApprox approx;
};

struct HyperGrid {
  std::vector<HyperGridPoint> points;
  int mode_index = 0;
  int dropped_points = 0;  // nonconvergent Newton, excluded with a warning
  HyperLayout layout;

  const HyperGridPoint& mode_point() const { return points[static_cast<size_t>(mode_index)]; }
};

HyperGrid explore_hypers(const DesignAssembly& asm_, const PriorSettings& priors,
                         const ExploreOptions& opts = {});

// Weight-mixture marginal summaries for every latent element.
struct LatentMarginal {
  double mean = 0.0, sd = 0.0, q025 = 0.0, q50 = 0.0, q975 = 0.0;
};
std::vector<LatentMarginal> latent_marginals(const HyperGrid& grid);

// Per-hyperparameter marginal: discrete grid plus natural-scale summaries.
struct HyperMarginal {
  std::string name;
  std::vector<double> z_values;   // sorted internal-scale support
  std::vector<double> weights;    // sums to 1
  double mean_natural = 0.0;      // E[exp(z)]
  double q025_natural = 0.0, q50_natural = 0.0, q975_natural = 0.0;
  double mean_sigma = 0.0;        // E[exp(-z/2)] for precision components
  bool degenerate = false;        // single-point grid
};
std::vector<HyperMarginal> hyper_marginals(const HyperGrid& grid);

// Joint draws (theta from grid weights, psi from the constrained Gaussian).
struct PosteriorDraws {
  Mat latent;  // n_draws x latent_dim
  Mat hyper;   // n_draws x hyper_dim
};
PosteriorDraws posterior_sample(const HyperGrid& grid, const DesignAssembly& asm_,
                                int n_draws, Rng& rng);

// Predictive count summaries for the assembly's prediction-only rows.
struct PredictionRow {
  int row = 0;
  double mean = 0.0, sd = 0.0, q025 = 0.0, q975 = 0.0;
};
std::vector<PredictionRow> predict_counts(const HyperGrid& grid, const DesignAssembly& asm_,
                                          const PosteriorDraws& draws, Rng& rng);

}  // namespace gcstar
