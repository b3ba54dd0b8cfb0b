#pragma once

#include <string>
#include <vector>

#include "gcstar/dataset.hpp"
#include "gcstar/fit.hpp"
#include "gcstar/model.hpp"

namespace gcstar {

// One dispersion scenario of the simulation study: a regular lattice on
// the unit square, covariate z ~ U(-1,1), responses from
// GC(alpha, alpha*exp(f_z(z) + f_s(s1,s2))).
struct Scenario {
  double alpha_true = 1.0;
  int n1 = 10;
  int n2 = 10;
  int n_reps = 20;
  std::uint64_t seed = 20240501;

  void validate() const;
};

// f_z(z) = sin(z).
double sim_f_z(double z);
// Two-bump surface on the unit square.
double sim_f_s(double s1, double s2);

// Deterministic replicate r of the scenario.
Dataset gen_replicate(const Scenario& sc, int r);

struct StudyOptions {
  std::vector<LikelihoodKind> models = {LikelihoodKind::GC, LikelihoodKind::Poisson,
                                        LikelihoodKind::NegBin};
  PriorSettings priors;
  FitOptions fit;
  int smooth_bins = 25;
  RwOrder smooth_order = RwOrder::Rw2;
  Rw2dVariant rw2d_variant = Rw2dVariant::Paper;
  int fz_eval_points = 101;  // fixed grid on [-1,1] for the f_z MSE curve
};

struct ReplicateRecord {
  double alpha_true = 0.0;
  int rep = 0;
  LikelihoodKind model = LikelihoodKind::GC;
  bool ok = false;
  std::string error;
  double alpha_hat = 0.0;    // likelihood hyper posterior mean (GC/NB/GP)
  double alpha_q025 = 0.0;
  double alpha_q975 = 0.0;
  double alpha_se = 0.0;     // (alpha_hat - alpha_true)^2, GC only
  double dic = 0.0;
  double waic = 0.0;
  double rep_mse_fz = 0.0;   // mean over the f_z evaluation grid
  double rep_mse_fs = 0.0;   // mean over lattice cells
};

struct StudyReport {
  Scenario scenario;
  std::vector<ReplicateRecord> records;
  // Per model: squared-error matrices (rows = replicates) behind the MSE
  // curves; columns are the fixed f_z grid / lattice cells.
  std::vector<LikelihoodKind> models;
  std::vector<Mat> fz_sqerr;
  std::vector<Mat> fs_sqerr;
  Vec fz_grid;
  int failures = 0;
};

StudyReport run_study(const Scenario& sc, const StudyOptions& opts);

// study_replicates.csv, study_summary.csv, mse_fz.csv, mse_fs_grid.csv.
void write_study_csvs(const std::vector<StudyReport>& reports, const std::string& out_dir);

}  // namespace gcstar
