#include "gcstar/inference.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <string>

#include "gcstar/errors.hpp"
#include "gcstar/gc.hpp"
#include "gcstar/likelihoods.hpp"

namespace gcstar {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

}  // namespace

const PcPrecisionPrior& PriorSettings::tau_prior_for(const std::string& block_name) const {
  auto it = tau_overrides.find(block_name);
  return it == tau_overrides.end() ? default_tau_prior : it->second;
}

HyperLayout HyperLayout::for_assembly(const DesignAssembly& asm_) {
  HyperLayout layout;
  layout.has_lik_hyper = likelihood_has_hyper(asm_.likelihood);
  if (layout.has_lik_hyper) {
    switch (asm_.likelihood) {
      case LikelihoodKind::GC: layout.names.push_back("log_alpha"); break;
      case LikelihoodKind::NegBin: layout.names.push_back("log_size"); break;
      case LikelihoodKind::GenPoisson: layout.names.push_back("log_phi"); break;
      default: break;
    }
  }
  for (const LatentBlock& b : asm_.blocks) {
    if (b.penalized) layout.names.push_back("log_tau_" + b.name);
  }
  return layout;
}

double lik_hyper_value(const HyperLayout& layout, const HyperPoint& theta) {
  if (!layout.has_lik_hyper) return 0.0;
  return std::exp(theta.z[0]);
}

Vec tau_values(const HyperLayout& layout, const HyperPoint& theta) {
  const int start = layout.has_lik_hyper ? 1 : 0;
  Vec taus(layout.dim() - start);
  for (int k = start; k < layout.dim(); ++k) taus[k - start] = std::exp(theta.z[k]);
  return taus;
}

double log_hyper_prior(const HyperPoint& theta, const DesignAssembly& asm_,
                       const PriorSettings& priors, const HyperLayout& layout) {
  if (theta.z.size() != layout.dim()) throw DomainError("hyper point dimension mismatch");
  // Bound the internal scale so exp(z) stays finite through every
  // downstream formula; optimizers treat the outside as rejected.
  for (int i = 0; i < theta.z.size(); ++i) {
    if (!std::isfinite(theta.z[i]) || std::fabs(theta.z[i]) > 40.0) return kNegInf;
  }
  double lp = 0.0;
  int k = 0;
  if (layout.has_lik_hyper) {
    const double z = theta.z[k++];
    const double value = std::exp(z);
    switch (asm_.likelihood) {
      case LikelihoodKind::GC:
        lp += pc_alpha_log_density(value, priors.alpha_prior) + z;
        break;
      case LikelihoodKind::NegBin:
        lp += pc_precision_log_density(value, priors.nb_size_prior) + z;
        break;
      case LikelihoodKind::GenPoisson:
        if (value >= 1.0) return kNegInf;
        lp += std::log(priors.gp_phi_rate) - priors.gp_phi_rate * value + z;
        break;
      default:
        break;
    }
  }
  for (const LatentBlock& b : asm_.blocks) {
    if (!b.penalized) continue;
    const double z = theta.z[k++];
    lp += pc_precision_log_density(std::exp(z), priors.tau_prior_for(b.name)) + z;
  }
  return lp;
}

double log_joint(const Vec& psi, const HyperPoint& theta, const DesignAssembly& asm_,
                 const PriorSettings& priors) {
  const HyperLayout layout = HyperLayout::for_assembly(asm_);
  const double hyper_lp = log_hyper_prior(theta, asm_, priors, layout);
  if (hyper_lp == kNegInf) return kNegInf;
  const double hyper = lik_hyper_value(layout, theta);

  const Vec eta = asm_.A_obs * psi + asm_.offset_obs;
  double lik = 0.0;
  for (int i = 0; i < eta.size(); ++i) {
    const double ll = loglik_value(asm_.likelihood, asm_.y_obs[i], eta[i], hyper);
    if (ll == kNegInf) return kNegInf;
    lik += ll;
  }

  double prior_lp = 0.0;
  int tau_idx = layout.has_lik_hyper ? 1 : 0;
  for (const LatentBlock& b : asm_.blocks) {
    const Vec psi_b = psi.segment(b.offset, b.size);
    if (b.type == BlockType::Fixed) {
      prior_lp += gaussian_fixed_log_density(psi_b[0], asm_.fixed_prior_variance);
      continue;
    }
    const double tau = std::exp(theta.z[tau_idx++]);
    const double quad = psi_b.dot(b.prior.Q * psi_b);
    const double r = static_cast<double>(b.prior.rank());
    prior_lp += 0.5 * r * (std::log(tau) - kLogTwoPi) + 0.5 * b.gen_logdet -
                0.5 * tau * quad;
  }
  return lik + prior_lp + hyper_lp;
}

namespace {

SparseMat prior_precision(const HyperPoint& theta, const DesignAssembly& asm_,
                          const HyperLayout& layout) {
  std::vector<Eigen::Triplet<double>> trips;
  int tau_idx = layout.has_lik_hyper ? 1 : 0;
  for (const LatentBlock& b : asm_.blocks) {
    if (b.type == BlockType::Fixed) {
      trips.emplace_back(b.offset, b.offset, 1.0 / asm_.fixed_prior_variance);
      continue;
    }
    const double tau = std::exp(theta.z[tau_idx++]);
    for (int k = 0; k < b.prior.Q.outerSize(); ++k) {
      for (SparseMat::InnerIterator it(b.prior.Q, k); it; ++it) {
        trips.emplace_back(b.offset + static_cast<int>(it.row()),
                           b.offset + static_cast<int>(it.col()), tau * it.value());
      }
    }
  }
  SparseMat q(asm_.latent_dim, asm_.latent_dim);
  q.setFromTriplets(trips.begin(), trips.end());
  q.makeCompressed();
  return q;
}

struct ObsEval {
  double loglik_sum = 0.0;
  Vec d1;
  Vec w;  // -d2 after clamping
  int clamp_events = 0;
  bool rejected = false;
};

ObsEval eval_observations(const DesignAssembly& asm_, const Vec& psi, double hyper,
                          bool derivatives) {
  ObsEval ev;
  const Vec eta = asm_.A_obs * psi + asm_.offset_obs;
  const int n = static_cast<int>(eta.size());
  if (derivatives) {
    ev.d1 = Vec(n);
    ev.w = Vec(n);
  }
  for (int i = 0; i < n; ++i) {
    if (derivatives) {
      const LoglikEval e = loglik_eta(asm_.likelihood, asm_.y_obs[i], eta[i], hyper);
      if (e.loglik == kNegInf) {
        ev.rejected = true;
        return ev;
      }
      ev.loglik_sum += e.loglik;
      ev.d1[i] = e.d1;
      ev.w[i] = -e.d2;
      if (e.d2_clamped) ++ev.clamp_events;
    } else {
      const double ll = loglik_value(asm_.likelihood, asm_.y_obs[i], eta[i], hyper);
      if (ll == kNegInf) {
        ev.rejected = true;
        return ev;
      }
      ev.loglik_sum += ll;
    }
  }
  return ev;
}

// psi-dependent part of log_joint at fixed theta.
double latent_objective(const DesignAssembly& asm_, const SparseMat& q_prior,
                        const Vec& psi, double hyper) {
  const ObsEval ev = eval_observations(asm_, psi, hyper, false);
  if (ev.rejected) return kNegInf;
  return ev.loglik_sum - 0.5 * psi.dot(q_prior * psi);
}

}  // namespace

Vec GaussianApprox::solve(const Vec& b) const { return factor->solve(b); }

void GaussianApprox::constrain(Vec& x, const DesignAssembly& asm_) const {
  if (asm_.constraints.rows() == 0) return;
  const Vec resid = asm_.constraints * x;
  x -= v * (m_inv * resid);
}

GaussianApprox latent_gaussian_approx(const HyperPoint& theta, const DesignAssembly& asm_,
                                      const PriorSettings& priors, const NewtonOptions& opts,
                                      const Vec* warm_start) {
  (void)priors;  // the latent conditional involves no hyperprior terms
  const HyperLayout layout = HyperLayout::for_assembly(asm_);
  const double hyper = lik_hyper_value(layout, theta);
  const SparseMat q_prior = prior_precision(theta, asm_, layout);
  const Mat& ac = asm_.constraints;
  const int n_con = static_cast<int>(ac.rows());

  GaussianApprox approx;
  approx.mode = warm_start ? *warm_start : Vec::Zero(asm_.latent_dim);
  approx.factor = std::make_shared<Eigen::SimplicialLLT<SparseMat>>();

  double objective = latent_objective(asm_, q_prior, approx.mode, hyper);
  if (objective == kNegInf && warm_start) {
    approx.mode = Vec::Zero(asm_.latent_dim);
    objective = latent_objective(asm_, q_prior, approx.mode, hyper);
  }

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    approx.newton_iters = iter + 1;
    const ObsEval ev = eval_observations(asm_, approx.mode, hyper, true);
    if (ev.rejected) {
      approx.converged = false;
      return approx;
    }
    approx.clamp_events += ev.clamp_events;

    const Vec grad = asm_.A_obs.transpose() * ev.d1 - q_prior * approx.mode;
    SparseMat h =
        SparseMat(asm_.A_obs.transpose() * ev.w.asDiagonal() * asm_.A_obs) + q_prior;
    if (n_con > 0) {
      // Exact augmentation: kappa Ac'Ac vanishes on {Ac psi = 0}, so the
      // conditioned mode, covariance, and determinant are untouched while
      // the between-block trade directions become invertible.
      const double kappa =
          std::max(1.0, Vec(h.diagonal()).sum() / static_cast<double>(asm_.latent_dim));
      h += kappa * asm_.constraint_outer;
    }
    approx.factor->compute(h);
    if (approx.factor->info() != Eigen::Success) {
      throw FactorizationError("latent_gaussian_approx: Cholesky factorization failed");
    }
    if (n_con > 0) {
      approx.v = Mat(asm_.latent_dim, n_con);
      for (int c = 0; c < n_con; ++c) {
        approx.v.col(c) = approx.factor->solve(ac.row(c).transpose());
      }
      const Mat m = ac * approx.v;
      approx.m_inv = m.inverse();
    }

    // Convergence on the constrained stationarity residual: the gradient
    // net of its component in the constraint row space.
    Vec grad_eff = grad;
    if (n_con > 0) {
      const Mat aat = ac * ac.transpose();
      grad_eff -= ac.transpose() * aat.ldlt().solve(ac * grad);
    }
    if (grad_eff.cwiseAbs().maxCoeff() < opts.tol) {
      approx.converged = true;
      break;
    }

    const Vec step = approx.factor->solve(grad);
    double scale = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 30; ++halving) {
      Vec candidate = approx.mode + scale * step;
      approx.constrain(candidate, asm_);
      const double cand_obj = latent_objective(asm_, q_prior, candidate, hyper);
      if (cand_obj > objective - 1e-12 || cand_obj > objective - 1e-9 * std::fabs(objective)) {
        approx.mode = candidate;
        objective = cand_obj;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) break;  // stalled; converged flag stays false unless grad is small
  }

  // Determinants for the Laplace ratio, with the constraint correction.
  const SparseMat lmat(approx.factor->matrixL());
  double log_det = 0.0;
  for (int i = 0; i < asm_.latent_dim; ++i) {
    log_det += std::log(lmat.coeff(i, i));
  }
  approx.log_det_h = 2.0 * log_det;
  if (n_con > 0) {
    const Mat m = ac * approx.v;
    approx.log_det_corr = std::log(m.determinant());
  }
  return approx;
}

void finalize_marginals(GaussianApprox& approx, const DesignAssembly& asm_) {
  const int d = static_cast<int>(approx.mode.size());
  const int n_con = static_cast<int>(asm_.constraints.rows());
  approx.marginal_sd = Vec(d);
  Vec e = Vec::Zero(d);
  for (int j = 0; j < d; ++j) {
    e[j] = 1.0;
    const Vec col = approx.factor->solve(e);
    double var = col[j];
    if (n_con > 0) {
      const Vec vj = approx.v.row(j).transpose();
      var -= vj.dot(approx.m_inv * vj);
    }
    approx.marginal_sd[j] = std::sqrt(std::max(var, 0.0));
    e[j] = 0.0;
  }
}

double hyper_log_posterior(const HyperPoint& theta, const GaussianApprox& approx,
                           const DesignAssembly& asm_, const PriorSettings& priors) {
  if (!approx.converged) {
    throw ConvergenceError("hyper_log_posterior: latent approximation did not converge");
  }
  const double joint = log_joint(approx.mode, theta, asm_, priors);
  if (joint == kNegInf) return kNegInf;
  return joint + 0.5 * asm_.latent_dim * kLogTwoPi -
         0.5 * (approx.log_det_h + approx.log_det_corr);
}

namespace {

struct Posterior {
  const DesignAssembly& asm_;
  const PriorSettings& priors;
  NewtonOptions newton = {};
  mutable Vec warm = {};
  mutable bool has_warm = false;
  mutable int failures = 0;

  // Returns (log posterior, approx); -inf when Newton fails.
  std::pair<double, GaussianApprox> eval(const Vec& z) const {
    for (int i = 0; i < z.size(); ++i) {
      if (!std::isfinite(z[i]) || std::fabs(z[i]) > 40.0) {
        return {kNegInf, GaussianApprox{}};
      }
    }
    HyperPoint theta{z};
    // Reject prior-inadmissible hypers (e.g. GP dispersion >= 1) before
    // any Newton work; the likelihood would throw on them.
    if (log_hyper_prior(theta, asm_, priors, HyperLayout::for_assembly(asm_)) == kNegInf) {
      return {kNegInf, GaussianApprox{}};
    }
    GaussianApprox approx;
    try {
      approx =
          latent_gaussian_approx(theta, asm_, priors, newton, has_warm ? &warm : nullptr);
    } catch (const FactorizationError&) {
      // Extreme theta can push unpenalized directions below rounding
      // resolution; treat exactly like a nonconvergent point.
      ++failures;
      return {kNegInf, GaussianApprox{}};
    }
    if (!approx.converged) {
      ++failures;
      return {kNegInf, std::move(approx)};
    }
    warm = approx.mode;
    has_warm = true;
    return {hyper_log_posterior(theta, approx, asm_, priors), std::move(approx)};
  }

  double value(const Vec& z) const { return eval(z).first; }
};

// Nelder-Mead ascent on the hyper posterior.
Vec nelder_mead(const Posterior& post, Vec start, double init_step, int max_eval,
                double ftol) {
  const int d = static_cast<int>(start.size());
  std::vector<Vec> simplex;
  std::vector<double> f;
  simplex.push_back(start);
  f.push_back(post.value(start));
  for (int i = 0; i < d; ++i) {
    Vec v = start;
    v[i] += init_step;
    simplex.push_back(v);
    f.push_back(post.value(v));
  }
  int evals = d + 1;
  auto order = [&] {
    std::vector<int> idx(simplex.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return f[static_cast<size_t>(a)] > f[static_cast<size_t>(b)]; });
    std::vector<Vec> s2;
    std::vector<double> f2;
    for (int i : idx) {
      s2.push_back(simplex[static_cast<size_t>(i)]);
      f2.push_back(f[static_cast<size_t>(i)]);
    }
    simplex = std::move(s2);
    f = std::move(f2);
  };
  order();
  while (evals < max_eval) {
    if (std::isfinite(f.front()) && std::isfinite(f.back()) &&
        f.front() - f.back() < ftol) {
      break;
    }
    Vec centroid = Vec::Zero(d);
    for (int i = 0; i < d; ++i) centroid += simplex[static_cast<size_t>(i)];
    centroid /= static_cast<double>(d);

    const Vec worst = simplex.back();
    const Vec refl = centroid + (centroid - worst);
    const double f_refl = post.value(refl);
    ++evals;
    if (f_refl > f.front()) {
      const Vec expand = centroid + 2.0 * (centroid - worst);
      const double f_exp = post.value(expand);
      ++evals;
      if (f_exp > f_refl) {
        simplex.back() = expand;
        f.back() = f_exp;
      } else {
        simplex.back() = refl;
        f.back() = f_refl;
      }
    } else if (f_refl > f[static_cast<size_t>(d - 1)]) {
      simplex.back() = refl;
      f.back() = f_refl;
    } else {
      const Vec contract = centroid + 0.5 * (worst - centroid);
      const double f_con = post.value(contract);
      ++evals;
      if (f_con > f.back()) {
        simplex.back() = contract;
        f.back() = f_con;
      } else {
        for (size_t i = 1; i < simplex.size(); ++i) {
          simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
          f[i] = post.value(simplex[i]);
          ++evals;
        }
      }
    }
    order();
  }
  return simplex.front();
}

// Standardizing transform at the mode: columns are unit steps along the
// principal axes of the negative Hessian of the log posterior.
Mat standardizing_transform(const Posterior& post, const Vec& mode, double h) {
  const int d = static_cast<int>(mode.size());
  Mat hess(d, d);
  const double f0 = post.value(mode);
  // A stray rejection in a finite-difference stencil must not poison the
  // Hessian; treat it as a deep but finite drop.
  auto value = [&](const Vec& z) { return std::max(post.value(z), f0 - 100.0); };
  for (int i = 0; i < d; ++i) {
    Vec up = mode, dn = mode;
    up[i] += h;
    dn[i] -= h;
    const double fu = value(up);
    const double fd = value(dn);
    hess(i, i) = -(fu - 2.0 * f0 + fd) / (h * h);
    for (int j = i + 1; j < d; ++j) {
      Vec pp = mode, pm = mode, mp = mode, mm = mode;
      pp[i] += h; pp[j] += h;
      pm[i] += h; pm[j] -= h;
      mp[i] -= h; mp[j] += h;
      mm[i] -= h; mm[j] -= h;
      const double v =
          -(value(pp) - value(pm) - value(mp) + value(mm)) / (4.0 * h * h);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(hess);
  Mat transform(d, d);
  for (int i = 0; i < d; ++i) {
    const double lambda = std::max(es.eigenvalues()[i], 1e-4);
    transform.col(i) = es.eigenvectors().col(i) / std::sqrt(lambda);
  }
  return transform;
}

}  // namespace

HyperGrid explore_hypers(const DesignAssembly& asm_, const PriorSettings& priors,
                         const ExploreOptions& opts) {
  HyperGrid grid;
  grid.layout = HyperLayout::for_assembly(asm_);
  const int d = grid.layout.dim();

  Posterior post{asm_, priors, opts.newton};

  if (d == 0) {
    auto [lp, approx] = post.eval(Vec(0));
    if (lp == kNegInf) throw ConvergenceError("explore_hypers: Newton failed at the fixed point");
    finalize_marginals(approx, asm_);
    grid.points.push_back({HyperPoint{Vec(0)}, lp, 1.0, std::move(approx)});
    grid.mode_index = 0;
    return grid;
  }

  // Mode search with restarts.  The GP dispersion must start inside its
  // admissible region phi < 1 (z = 0 sits exactly on the boundary).
  Vec init = Vec::Zero(d);
  if (grid.layout.has_lik_hyper && asm_.likelihood == LikelihoodKind::GenPoisson) {
    init[0] = -1.6;
  }
  Vec mode = init;
  double best = kNegInf;
  for (int attempt = 0; attempt <= opts.nm_restarts; ++attempt) {
    const double step = attempt == 0 ? 1.0 : 0.5 * (attempt + 1);
    Vec start = attempt == 0 ? init : mode;
    const Vec cand = nelder_mead(post, start, step, 200 * d, 1e-6);
    const double f = post.value(cand);
    if (f > best) {
      best = f;
      mode = cand;
    }
    if (std::isfinite(best) && attempt >= 1) break;
  }
  if (!std::isfinite(best)) {
    throw ConvergenceError("explore_hypers: hyper mode search failed after restarts");
  }

  ExploreMode mode_kind = opts.mode;
  if (mode_kind == ExploreMode::Auto) {
    mode_kind = d <= 2 ? ExploreMode::Grid : ExploreMode::Ccd;
  }

  struct Candidate {
    Vec u;       // standardized coordinates
    double design_weight = 1.0;
  };
  std::vector<Candidate> candidates;

  if (mode_kind == ExploreMode::EmpiricalBayes) {
    candidates.push_back({Vec::Zero(d), 1.0});
  } else if (mode_kind == ExploreMode::Ccd) {
    const double f0 = opts.ccd_f0;
    const double radius = f0 * std::sqrt(static_cast<double>(d));
    std::vector<Vec> sphere;
    for (int i = 0; i < d; ++i) {
      Vec u = Vec::Zero(d);
      u[i] = radius;
      sphere.push_back(u);
      sphere.push_back(-u);
    }
    if (d <= 8) {
      for (int mask = 0; mask < (1 << d); ++mask) {
        Vec u(d);
        for (int i = 0; i < d; ++i) u[i] = (mask >> i) & 1 ? f0 : -f0;
        sphere.push_back(u);
      }
    }
    const double w_sphere = 1.0 / (static_cast<double>(sphere.size()) * f0 * f0);
    candidates.push_back({Vec::Zero(d), 1.0 - 1.0 / (f0 * f0)});
    for (const Vec& u : sphere) candidates.push_back({u, w_sphere});
  }

  const Mat transform = standardizing_transform(post, mode, 0.25);

  if (mode_kind == ExploreMode::Grid) {
    // Breadth-first fill of the standardized axis lattice while the log
    // posterior stays within log_drop of the mode.
    std::set<std::vector<int>> seen;
    std::deque<std::vector<int>> frontier;
    std::vector<std::vector<int>> kept;
    const std::vector<int> origin(static_cast<size_t>(d), 0);
    frontier.push_back(origin);
    seen.insert(origin);
    while (!frontier.empty() && static_cast<int>(kept.size()) < opts.max_points) {
      const std::vector<int> k = frontier.front();
      frontier.pop_front();
      Vec u(d);
      for (int i = 0; i < d; ++i) u[i] = opts.grid_step * k[static_cast<size_t>(i)];
      const double lp = post.value(mode + transform * u);
      if (lp < best - opts.log_drop) continue;
      kept.push_back(k);
      for (int i = 0; i < d; ++i) {
        for (int dir : {-1, 1}) {
          std::vector<int> nb = k;
          nb[static_cast<size_t>(i)] += dir;
          if (seen.insert(nb).second) frontier.push_back(nb);
        }
      }
    }
    std::sort(kept.begin(), kept.end());
    for (const auto& k : kept) {
      Vec u(d);
      for (int i = 0; i < d; ++i) u[i] = opts.grid_step * k[static_cast<size_t>(i)];
      candidates.push_back({u, 1.0});
    }
  }

  // Evaluate candidates, dropping nonconvergent points.
  for (const Candidate& c : candidates) {
    const Vec z = mode + transform * c.u;
    auto [lp, approx] = post.eval(z);
    if (lp == kNegInf) {
      ++grid.dropped_points;
      continue;
    }
    HyperGridPoint p;
    p.theta.z = z;
    p.log_post = lp;
    // Gaussian-matching correction keeps design weights exact when the
    // standardized posterior is Gaussian.
    p.weight = mode_kind == ExploreMode::Grid || mode_kind == ExploreMode::EmpiricalBayes
                   ? std::exp(lp - best)
                   : c.design_weight * std::exp(lp - best + 0.5 * c.u.squaredNorm());
    p.approx = std::move(approx);
    grid.points.push_back(std::move(p));
  }
  if (grid.points.empty()) {
    throw ConvergenceError("explore_hypers: every grid point failed");
  }

  double total = 0.0;
  for (const HyperGridPoint& p : grid.points) total += p.weight;
  grid.mode_index = 0;
  for (size_t i = 0; i < grid.points.size(); ++i) {
    grid.points[i].weight /= total;
    if (grid.points[i].log_post > grid.points[static_cast<size_t>(grid.mode_index)].log_post) {
      grid.mode_index = static_cast<int>(i);
    }
  }
  for (HyperGridPoint& p : grid.points) finalize_marginals(p.approx, asm_);
  return grid;
}

std::vector<LatentMarginal> latent_marginals(const HyperGrid& grid) {
  if (grid.points.empty()) throw DomainError("latent_marginals: empty grid");
  const int d = static_cast<int>(grid.points.front().approx.mode.size());
  std::vector<LatentMarginal> out(static_cast<size_t>(d));

  for (int j = 0; j < d; ++j) {
    double mean = 0.0, second = 0.0;
    for (const HyperGridPoint& p : grid.points) {
      const double mu = p.approx.mode[j];
      const double sd = p.approx.marginal_sd[j];
      mean += p.weight * mu;
      second += p.weight * (sd * sd + mu * mu);
    }
    LatentMarginal& m = out[static_cast<size_t>(j)];
    m.mean = mean;
    m.sd = std::sqrt(std::max(second - mean * mean, 0.0));

    auto mixture_cdf = [&](double q) {
      double c = 0.0;
      for (const HyperGridPoint& p : grid.points) {
        const double sd = std::max(p.approx.marginal_sd[j], 1e-300);
        c += p.weight * std_normal_cdf((q - p.approx.mode[j]) / sd);
      }
      return c;
    };
    auto quantile = [&](double prob) {
      double lo = mean - 12.0 * (m.sd + 1e-12);
      double hi = mean + 12.0 * (m.sd + 1e-12);
      for (int it = 0; it < 90; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mixture_cdf(mid) < prob) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      return 0.5 * (lo + hi);
    };
    m.q025 = quantile(0.025);
    m.q50 = quantile(0.5);
    m.q975 = quantile(0.975);
  }
  return out;
}

std::vector<HyperMarginal> hyper_marginals(const HyperGrid& grid) {
  std::vector<HyperMarginal> out;
  const int d = grid.layout.dim();
  for (int k = 0; k < d; ++k) {
    HyperMarginal m;
    m.name = grid.layout.names[static_cast<size_t>(k)];
    // Collapse weights over the other axes.
    std::map<double, double> mass;
    for (const HyperGridPoint& p : grid.points) {
      double key = p.theta.z[k];
      // merge keys within rounding noise
      auto it = mass.lower_bound(key - 1e-9);
      if (it != mass.end() && std::fabs(it->first - key) < 1e-9) {
        it->second += p.weight;
      } else {
        mass[key] += p.weight;
      }
    }
    for (const auto& [z, w] : mass) {
      m.z_values.push_back(z);
      m.weights.push_back(w);
    }
    m.degenerate = m.z_values.size() < 2;

    double mean_nat = 0.0, mean_sig = 0.0;
    for (size_t i = 0; i < m.z_values.size(); ++i) {
      mean_nat += m.weights[i] * std::exp(m.z_values[i]);
      mean_sig += m.weights[i] * std::exp(-0.5 * m.z_values[i]);
    }
    m.mean_natural = mean_nat;
    m.mean_sigma = mean_sig;

    // Piecewise-linear quantiles on the kept axis (plotting positions).
    auto z_quantile = [&](double prob) {
      const size_t n = m.z_values.size();
      if (n == 1) return m.z_values[0];
      std::vector<double> cum(n);
      double acc = 0.0;
      for (size_t i = 0; i < n; ++i) {
        cum[i] = acc + 0.5 * m.weights[i];
        acc += m.weights[i];
      }
      if (prob <= cum.front()) return m.z_values.front();
      if (prob >= cum.back()) return m.z_values.back();
      for (size_t i = 1; i < n; ++i) {
        if (prob <= cum[i]) {
          const double f = (prob - cum[i - 1]) / (cum[i] - cum[i - 1]);
          return m.z_values[i - 1] + f * (m.z_values[i] - m.z_values[i - 1]);
        }
      }
      return m.z_values.back();
    };
    m.q025_natural = std::exp(z_quantile(0.025));
    m.q50_natural = std::exp(z_quantile(0.5));
    m.q975_natural = std::exp(z_quantile(0.975));
    out.push_back(std::move(m));
  }
  return out;
}

PosteriorDraws posterior_sample(const HyperGrid& grid, const DesignAssembly& asm_,
                                int n_draws, Rng& rng) {
  if (n_draws < 1) throw DomainError("posterior_sample: need n_draws >= 1");
  const int d = asm_.latent_dim;
  const int hd = grid.layout.dim();
  PosteriorDraws draws;
  draws.latent = Mat(n_draws, d);
  draws.hyper = Mat(n_draws, hd);

  std::vector<double> cdf(grid.points.size());
  double acc = 0.0;
  for (size_t i = 0; i < grid.points.size(); ++i) {
    acc += grid.points[i].weight;
    cdf[i] = acc;
  }

  Vec xi(d);
  for (int s = 0; s < n_draws; ++s) {
    const auto g = static_cast<size_t>(
        rng.categorical_from_cdf(cdf.data(), static_cast<std::int64_t>(cdf.size())));
    const HyperGridPoint& p = grid.points[g];
    for (int i = 0; i < d; ++i) xi[i] = rng.normal();
    // x = mode + P^-1 U^{-1} xi has covariance H^{-1}.
    Vec x = p.approx.factor->permutationPinv() *
            Vec(p.approx.factor->matrixU().solve(xi));
    x += p.approx.mode;
    p.approx.constrain(x, asm_);
    draws.latent.row(s) = x.transpose();
    if (hd > 0) draws.hyper.row(s) = p.theta.z.transpose();
  }
  return draws;
}

std::vector<PredictionRow> predict_counts(const HyperGrid& grid, const DesignAssembly& asm_,
                                          const PosteriorDraws& draws, Rng& rng) {
  std::vector<PredictionRow> out;
  if (asm_.prediction_rows.empty()) return out;
  const int n_draws = static_cast<int>(draws.latent.rows());
  if (n_draws < 1) throw DomainError("predict_counts: no draws");

  Mat samples(n_draws, static_cast<int>(asm_.prediction_rows.size()));
  for (int s = 0; s < n_draws; ++s) {
    const Vec psi = draws.latent.row(s).transpose();
    const Vec eta = asm_.A * psi + asm_.offset;
    const double hyper = grid.layout.has_lik_hyper ? std::exp(draws.hyper(s, 0)) : 0.0;
    for (size_t r = 0; r < asm_.prediction_rows.size(); ++r) {
      const int row = asm_.prediction_rows[r];
      samples(s, static_cast<int>(r)) =
          sample_observation(asm_.likelihood, eta[row], hyper, rng);
    }
  }
  for (size_t r = 0; r < asm_.prediction_rows.size(); ++r) {
    PredictionRow pr;
    pr.row = asm_.prediction_rows[r];
    Vec col = samples.col(static_cast<int>(r));
    pr.mean = col.mean();
    pr.sd = std::sqrt(std::max(col.cwiseAbs2().mean() - pr.mean * pr.mean, 0.0));
    std::vector<double> sorted(col.data(), col.data() + col.size());
    std::sort(sorted.begin(), sorted.end());
    auto q = [&sorted](double prob) {
      const double pos = prob * (static_cast<double>(sorted.size()) - 1.0);
      const size_t i = static_cast<size_t>(pos);
      if (i + 1 >= sorted.size()) return sorted.back();
      const double f = pos - static_cast<double>(i);
      return sorted[i] + f * (sorted[i + 1] - sorted[i]);
    };
    pr.q025 = q(0.025);
    pr.q975 = q(0.975);
    out.push_back(pr);
  }
  return out;
}

}  // namespace gcstar
