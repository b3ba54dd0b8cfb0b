#pragma once

#include <vector>

#include "gcstar/precision.hpp"

namespace gcstar {

// Rows = posterior draws, columns = observed data rows.
struct PointwiseLogLik {
  Mat values;

  int n_draws() const { return static_cast<int>(values.rows()); }
  int n_obs() const { return static_cast<int>(values.cols()); }
};

struct DicResult {
  double dic = 0.0;
  double p_d = 0.0;
  double mean_deviance = 0.0;
};

// loglik_at_mean is the plug-in log-likelihood at the posterior latent
// mean with the hypers at the modal grid point.
DicResult dic(const PointwiseLogLik& pll, double loglik_at_mean);

struct WaicResult {
  double waic = 0.0;
  double p_waic = 0.0;
  double lppd = 0.0;
  int unreliable_terms = 0;  // columns with draw variance above 0.4
};

WaicResult waic(const PointwiseLogLik& pll);

struct CpoResult {
  std::vector<double> cpo;           // per observed row
  double ls = 0.0;                   // -sum_i log CPO_i
  std::vector<int> dominated_rows;   // harmonic mean carried by one draw
};

CpoResult cpo_ls(const PointwiseLogLik& pll);

// Per-point mean squared error over replications: rows = replications.
struct MseResult {
  std::vector<double> per_point;
  double mean = 0.0;
};
MseResult mse_curve(const Mat& f_hat, const Vec& f_true);

double se_alpha(double alpha_hat, double alpha_true);

}  // namespace gcstar
