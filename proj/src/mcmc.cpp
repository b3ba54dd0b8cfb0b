#include "gcstar/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gcstar/errors.hpp"

namespace gcstar {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

McmcResult mcmc_reference(const DesignAssembly& asm_, const PriorSettings& priors,
                          const McmcOptions& opts) {
  if (asm_.latent_dim > 200) {
    throw DomainError("mcmc_reference: latent_dim " + std::to_string(asm_.latent_dim) +
                      " above the 200 guard (oracle is for small models)");
  }
  const HyperLayout layout = HyperLayout::for_assembly(asm_);
  const int hd = layout.dim();
  const int d = asm_.latent_dim;
  Rng rng(opts.seed, 0x6d636d63);

  // Preconditioner: factor of the Gaussian approximation at the hyper mode.
  ExploreOptions explore;
  explore.mode = ExploreMode::EmpiricalBayes;
  const HyperGrid eb = explore_hypers(asm_, priors, explore);
  const GaussianApprox& pre = eb.mode_point().approx;

  HyperPoint theta{eb.mode_point().theta.z};
  Vec psi = pre.mode;
  double lp = log_joint(psi, theta, asm_, priors);
  if (lp == kNegInf) {
    psi = Vec::Zero(d);
    pre.constrain(psi, asm_);
    lp = log_joint(psi, theta, asm_, priors);
  }

  std::vector<double> hyper_step(static_cast<size_t>(hd), 0.3);
  double latent_step = 0.4;
  std::vector<double> hyper_accepts(static_cast<size_t>(hd), 0.0);
  std::vector<double> hyper_tries(static_cast<size_t>(hd), 0.0);
  double latent_accepts = 0.0;
  double latent_tries = 0.0;

  const int kept = (opts.iterations - opts.burn_in) / opts.thin;
  if (kept < 1) throw DomainError("mcmc_reference: no kept iterations");
  McmcResult out;
  out.hyper = Mat(kept, hd);
  out.latent = Mat(kept, d);

  Vec xi(d);
  int stored = 0;
  for (int iter = 0; iter < opts.iterations; ++iter) {
    const bool adapting = iter < opts.burn_in;

    for (int k = 0; k < hd; ++k) {
      HyperPoint prop = theta;
      prop.z[k] += hyper_step[static_cast<size_t>(k)] * rng.normal();
      const double lp_prop = log_joint(psi, prop, asm_, priors);
      hyper_tries[static_cast<size_t>(k)] += 1.0;
      const bool accept = std::log(rng.uniform_pos()) < lp_prop - lp;
      if (accept) {
        theta = prop;
        lp = lp_prop;
        hyper_accepts[static_cast<size_t>(k)] += 1.0;
      }
      if (adapting && (iter + 1) % 50 == 0) {
        const double rate =
            hyper_accepts[static_cast<size_t>(k)] / std::max(hyper_tries[static_cast<size_t>(k)], 1.0);
        hyper_step[static_cast<size_t>(k)] *= rate > 0.44 ? 1.1 : 0.9;
      }
    }

    // Blocked latent proposal in the constraint subspace, preconditioned by
    // the approximation's factor; symmetric, so plain MH.
    for (int i = 0; i < d; ++i) xi[i] = rng.normal();
    Vec delta = pre.factor->permutationPinv() * Vec(pre.factor->matrixU().solve(xi));
    Vec prop_psi = psi + latent_step * delta;
    pre.constrain(prop_psi, asm_);
    const double lp_prop = log_joint(prop_psi, theta, asm_, priors);
    latent_tries += 1.0;
    if (std::log(rng.uniform_pos()) < lp_prop - lp) {
      psi = prop_psi;
      lp = lp_prop;
      latent_accepts += 1.0;
    }
    if (adapting && (iter + 1) % 50 == 0) {
      const double rate = latent_accepts / std::max(latent_tries, 1.0);
      latent_step *= rate > 0.25 ? 1.1 : 0.9;
    }

    if (!adapting && (iter - opts.burn_in) % opts.thin == 0 && stored < kept) {
      out.hyper.row(stored) = theta.z.transpose();
      out.latent.row(stored) = psi.transpose();
      ++stored;
    }
  }
  out.hyper.conservativeResize(stored, hd);
  out.latent.conservativeResize(stored, d);
  for (int k = 0; k < hd; ++k) {
    out.hyper_acceptance.push_back(hyper_accepts[static_cast<size_t>(k)] /
                                   std::max(hyper_tries[static_cast<size_t>(k)], 1.0));
  }
  out.latent_acceptance = latent_accepts / std::max(latent_tries, 1.0);
  return out;
}

double mcse_batch_means(const Vec& chain) {
  const int n = static_cast<int>(chain.size());
  if (n < 100) throw DomainError("mcse_batch_means: chain too short");
  const int n_batches = std::max(20, static_cast<int>(std::sqrt(static_cast<double>(n))) / 2);
  const int batch_len = n / n_batches;
  Vec means(n_batches);
  for (int b = 0; b < n_batches; ++b) {
    means[b] = chain.segment(b * batch_len, batch_len).mean();
  }
  const double grand = means.mean();
  const double var_means = (means.array() - grand).square().sum() / (n_batches - 1.0);
  return std::sqrt(var_means / n_batches);
}

double split_rhat(const Vec& chain) {
  const int n = static_cast<int>(chain.size());
  if (n < 8) throw DomainError("split_rhat: chain too short");
  const int half = n / 2;
  const int m = 2;
  Vec mean_c(m), var_c(m);
  for (int c = 0; c < m; ++c) {
    const Vec seg = chain.segment(c * half, half);
    mean_c[c] = seg.mean();
    var_c[c] = (seg.array() - mean_c[c]).square().sum() / (half - 1.0);
  }
  const double w = var_c.mean();
  const double grand = mean_c.mean();
  double b = 0.0;
  for (int c = 0; c < m; ++c) b += (mean_c[c] - grand) * (mean_c[c] - grand);
  b *= static_cast<double>(half) / (m - 1.0);
  const double var_plus = (half - 1.0) / half * w + b / half;
  return std::sqrt(var_plus / w);
}

}  // namespace gcstar
