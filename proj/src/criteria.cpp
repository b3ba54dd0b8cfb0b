#include "gcstar/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gcstar/errors.hpp"

namespace gcstar {

namespace {

void check_pll(const PointwiseLogLik& pll) {
  if (pll.n_draws() < 2) throw DomainError("criteria: need at least 2 draws");
  if (pll.n_obs() < 1) throw DomainError("criteria: need at least 1 observed row");
}

// log(mean_s exp(x_s)), stabilized.
double log_mean_exp(const Vec& x) {
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (int i = 0; i < x.size(); ++i) acc += std::exp(x[i] - m);
  return m + std::log(acc / static_cast<double>(x.size()));
}

}  // namespace

DicResult dic(const PointwiseLogLik& pll, double loglik_at_mean) {
  check_pll(pll);
  if (!std::isfinite(loglik_at_mean)) {
    throw DomainError("dic: plug-in log-likelihood is not finite");
  }
  DicResult r;
  r.mean_deviance = -2.0 * pll.values.sum() / static_cast<double>(pll.n_draws());
  r.p_d = r.mean_deviance - (-2.0 * loglik_at_mean);
  r.dic = r.mean_deviance + r.p_d;
  return r;
}

WaicResult waic(const PointwiseLogLik& pll) {
  check_pll(pll);
  WaicResult r;
  const int s = pll.n_draws();
  for (int i = 0; i < pll.n_obs(); ++i) {
    const Vec col = pll.values.col(i);
    r.lppd += log_mean_exp(col);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / (s - 1.0);
    r.p_waic += var;
    if (var > 0.4) ++r.unreliable_terms;
  }
  r.waic = -2.0 * (r.lppd - r.p_waic);
  return r;
}

CpoResult cpo_ls(const PointwiseLogLik& pll) {
  check_pll(pll);
  CpoResult r;
  const int s = pll.n_draws();
  r.cpo.reserve(static_cast<size_t>(pll.n_obs()));
  for (int i = 0; i < pll.n_obs(); ++i) {
    const Vec col = pll.values.col(i);
    // Harmonic mean: CPO_i = S / sum_s exp(-pll_si), in log space.
    const double log_inv_cpo = log_mean_exp(-col);
    const double log_cpo = -log_inv_cpo;
    r.cpo.push_back(std::exp(log_cpo));
    r.ls -= log_cpo;
    // Share of the harmonic-mean weight carried by the worst draw.
    const double worst = (-col).maxCoeff();
    const double share = std::exp(worst - log_inv_cpo - std::log(static_cast<double>(s)));
    if (share > 0.5) r.dominated_rows.push_back(i);
  }
  return r;
}

MseResult mse_curve(const Mat& f_hat, const Vec& f_true) {
  if (f_hat.cols() != f_true.size()) {
    throw DomainError("mse_curve: estimate/truth dimension mismatch");
  }
  if (f_hat.rows() < 1) throw DomainError("mse_curve: no replications");
  MseResult r;
  r.per_point.resize(static_cast<size_t>(f_true.size()));
  for (int i = 0; i < f_true.size(); ++i) {
    const double mse =
        (f_hat.col(i).array() - f_true[i]).square().sum() / static_cast<double>(f_hat.rows());
    r.per_point[static_cast<size_t>(i)] = mse;
    r.mean += mse;
  }
  r.mean /= static_cast<double>(f_true.size());
  return r;
}

double se_alpha(double alpha_hat, double alpha_true) {
  const double d = alpha_hat - alpha_true;
  return d * d;
}

}  // namespace gcstar
