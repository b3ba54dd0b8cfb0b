#include "gcstar/simstudy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "gcstar/errors.hpp"
#include "gcstar/gc.hpp"
#include "gcstar/parallel.hpp"

namespace gcstar {

void Scenario::validate() const {
  if (!(alpha_true > 0.0)) throw DomainError("Scenario: need alpha_true > 0");
  if (n1 < 3 || n2 < 3) throw DomainError("Scenario: lattice needs n1, n2 >= 3");
  if (n_reps < 1) throw DomainError("Scenario: need n_reps >= 1");
}

double sim_f_z(double z) { return std::sin(z); }

double sim_f_s(double s1, double s2) {
  return std::exp((-(s1 - 0.25) * (s1 - 0.25) - (s2 - 0.25) * (s2 - 0.25)) / 0.1) +
         0.5 * std::exp((-(s1 - 0.7) * (s1 - 0.7) - (s2 - 0.7) * (s2 - 0.7)) / 0.07);
}

Dataset gen_replicate(const Scenario& sc, int r) {
  sc.validate();
  Rng rng(sc.seed, 0x73696d00ULL + static_cast<std::uint64_t>(r));
  Dataset data;
  data.has_coords = true;
  for (int i = 0; i < sc.n1; ++i) {
    const double s1 = sc.n1 > 1 ? static_cast<double>(i) / (sc.n1 - 1) : 0.0;
    for (int j = 0; j < sc.n2; ++j) {
      const double s2 = sc.n2 > 1 ? static_cast<double>(j) / (sc.n2 - 1) : 0.0;
      const double z = rng.uniform(-1.0, 1.0);
      const double eta = sim_f_z(z) + sim_f_s(s1, s2);
      const GCParams p{sc.alpha_true, sc.alpha_true * std::exp(eta), 1.0};
      data.y.push_back(static_cast<double>(gc_sample(p, rng)));
      data.y_missing.push_back(false);
      data.s1.push_back(s1);
      data.s2.push_back(s2);
      data.covariates["z"].push_back(z);
    }
  }
  return data;
}

namespace {

// Posterior-mean smooth evaluated on a fixed grid via its bin layout.
Vec smooth_on_grid(const LatentBlock& block, const std::vector<LatentMarginal>& marg,
                   const Vec& grid) {
  const int m = block.size;
  Vec values(grid.size());
  // Bin edges implied by the midpoints (equal widths).
  const double width = block.bin_midpoints[1] - block.bin_midpoints[0];
  const double lo = block.bin_midpoints[0] - 0.5 * width;
  for (int g = 0; g < grid.size(); ++g) {
    int b = static_cast<int>(std::ceil((grid[g] - lo) / width)) - 1;
    b = std::clamp(b, 0, m - 1);
    values[g] = marg[static_cast<size_t>(block.offset + b)].mean;
  }
  return values;
}

Vec centered(const Vec& v) { return v.array() - v.mean(); }

}  // namespace

StudyReport run_study(const Scenario& sc, const StudyOptions& opts) {
  sc.validate();
  if (opts.models.empty()) throw DomainError("run_study: no models requested");

  StudyReport report;
  report.scenario = sc;
  report.models = opts.models;

  const int n_models = static_cast<int>(opts.models.size());
  const int n_cells = sc.n1 * sc.n2;
  report.fz_grid = Vec::LinSpaced(opts.fz_eval_points, -1.0, 1.0);
  for (int m = 0; m < n_models; ++m) {
    report.fz_sqerr.emplace_back(Mat::Constant(sc.n_reps, opts.fz_eval_points,
                                               std::numeric_limits<double>::quiet_NaN()));
    report.fs_sqerr.emplace_back(
        Mat::Constant(sc.n_reps, n_cells, std::numeric_limits<double>::quiet_NaN()));
  }

  // Truth on the fixed evaluation supports, centered like the estimates.
  Vec fz_true(opts.fz_eval_points);
  for (int g = 0; g < opts.fz_eval_points; ++g) fz_true[g] = sim_f_z(report.fz_grid[g]);
  fz_true = centered(fz_true);
  Vec fs_true(n_cells);
  for (int i = 0; i < sc.n1; ++i) {
    for (int j = 0; j < sc.n2; ++j) {
      const double s1 = static_cast<double>(i) / (sc.n1 - 1);
      const double s2 = static_cast<double>(j) / (sc.n2 - 1);
      fs_true[i * sc.n2 + j] = sim_f_s(s1, s2);
    }
  }
  fs_true = centered(fs_true);

  report.records.resize(static_cast<size_t>(sc.n_reps * n_models));

  parallel_for(sc.n_reps, [&](int r) {
    const Dataset data = gen_replicate(sc, r);
    for (int m = 0; m < n_models; ++m) {
      ReplicateRecord& rec = report.records[static_cast<size_t>(r * n_models + m)];
      rec.alpha_true = sc.alpha_true;
      rec.rep = r;
      rec.model = opts.models[static_cast<size_t>(m)];
      try {
        ModelSpec spec;
        spec.likelihood = rec.model;
        spec.intercept = true;
        spec.smooth_terms.push_back({"z", opts.smooth_order, opts.smooth_bins});
        SpatialTerm spatial;
        spatial.kind = SpatialTerm::Kind::Rw2d;
        spatial.n1 = sc.n1;
        spatial.n2 = sc.n2;
        spatial.variant = opts.rw2d_variant;
        spec.spatial = spatial;

        const DesignAssembly asm_ = build_design(spec, data);
        FitOptions fit_opts = opts.fit;
        fit_opts.seed = opts.fit.seed ^ (0x9e3779b97f4a7c15ULL * (r * n_models + m + 1));
        const FitResult fit = fit_model(asm_, opts.priors, fit_opts);

        rec.dic = fit.criteria.dic.dic;
        rec.waic = fit.criteria.waic.waic;
        if (fit.grid.layout.has_lik_hyper) {
          rec.alpha_hat = fit.hypers.front().mean_natural;
          rec.alpha_q025 = fit.hypers.front().q025_natural;
          rec.alpha_q975 = fit.hypers.front().q975_natural;
        }
        if (rec.model == LikelihoodKind::GC) {
          rec.alpha_se = se_alpha(rec.alpha_hat, sc.alpha_true);
        }

        const LatentBlock* smooth = asm_.find_block("smooth_z");
        const LatentBlock* spatial_block = asm_.find_block("spatial");
        if (smooth == nullptr || spatial_block == nullptr) {
          throw DomainError("run_study: expected smooth and spatial blocks");
        }
        const Vec fz_hat = centered(smooth_on_grid(*smooth, fit.latent, report.fz_grid));
        Vec fs_hat(n_cells);
        for (int c = 0; c < n_cells; ++c) {
          fs_hat[c] = fit.latent[static_cast<size_t>(spatial_block->offset + c)].mean;
        }
        fs_hat = centered(fs_hat);

        report.fz_sqerr[static_cast<size_t>(m)].row(r) =
            (fz_hat - fz_true).array().square().matrix().transpose();
        report.fs_sqerr[static_cast<size_t>(m)].row(r) =
            (fs_hat - fs_true).array().square().matrix().transpose();
        rec.rep_mse_fz = report.fz_sqerr[static_cast<size_t>(m)].row(r).mean();
        rec.rep_mse_fs = report.fs_sqerr[static_cast<size_t>(m)].row(r).mean();
        rec.ok = true;
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
      }
    }
  });

  for (const ReplicateRecord& rec : report.records) {
    if (!rec.ok) ++report.failures;
  }
  return report;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void write_study_csvs(const std::vector<StudyReport>& reports, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  std::ofstream reps(fs::path(out_dir) / "study_replicates.csv");
  reps << "alpha_true,rep,model,ok,alpha_hat,alpha_q025,alpha_q975,alpha_se,dic,waic,"
          "rep_mse_fz,rep_mse_fs,error\n";
  for (const StudyReport& rep : reports) {
    for (const ReplicateRecord& r : rep.records) {
      reps << fmt(r.alpha_true) << "," << r.rep << "," << to_string(r.model) << ","
           << (r.ok ? 1 : 0) << "," << fmt(r.alpha_hat) << "," << fmt(r.alpha_q025) << ","
           << fmt(r.alpha_q975) << "," << fmt(r.alpha_se) << "," << fmt(r.dic) << ","
           << fmt(r.waic) << "," << fmt(r.rep_mse_fz) << "," << fmt(r.rep_mse_fs) << ","
           << r.error << "\n";
    }
  }

  std::ofstream summary(fs::path(out_dir) / "study_summary.csv");
  summary << "alpha_true,model,n_ok,median_alpha_hat,median_dic,median_waic,"
             "median_mse_fz,median_mse_fs,coverage_alpha\n";
  for (const StudyReport& rep : reports) {
    for (LikelihoodKind model : rep.models) {
      std::vector<double> alpha_hats, dics, waics, fzs, fss;
      int n_ok = 0, covered = 0, with_hyper = 0;
      for (const ReplicateRecord& r : rep.records) {
        if (r.model != model || !r.ok) continue;
        ++n_ok;
        dics.push_back(r.dic);
        waics.push_back(r.waic);
        fzs.push_back(r.rep_mse_fz);
        fss.push_back(r.rep_mse_fs);
        if (likelihood_has_hyper(model)) {
          alpha_hats.push_back(r.alpha_hat);
          ++with_hyper;
          if (r.alpha_q025 <= rep.scenario.alpha_true &&
              rep.scenario.alpha_true <= r.alpha_q975) {
            ++covered;
          }
        }
      }
      summary << fmt(rep.scenario.alpha_true) << "," << to_string(model) << "," << n_ok << ","
              << fmt(median_of(alpha_hats)) << "," << fmt(median_of(dics)) << ","
              << fmt(median_of(waics)) << "," << fmt(median_of(fzs)) << ","
              << fmt(median_of(fss)) << ","
              << fmt(with_hyper > 0 ? static_cast<double>(covered) / with_hyper
                                    : std::numeric_limits<double>::quiet_NaN())
              << "\n";
    }
  }

  std::ofstream fz(fs::path(out_dir) / "mse_fz.csv");
  fz << "alpha_true,model,z,mse\n";
  for (const StudyReport& rep : reports) {
    for (size_t m = 0; m < rep.models.size(); ++m) {
      const Mat& sq = rep.fz_sqerr[m];
      for (int g = 0; g < rep.fz_grid.size(); ++g) {
        double acc = 0.0;
        int count = 0;
        for (int r = 0; r < sq.rows(); ++r) {
          if (std::isfinite(sq(r, g))) {
            acc += sq(r, g);
            ++count;
          }
        }
        fz << fmt(rep.scenario.alpha_true) << "," << to_string(rep.models[m]) << ","
           << fmt(rep.fz_grid[g]) << "," << fmt(count > 0 ? acc / count : NAN) << "\n";
      }
    }
  }

  std::ofstream fscsv(fs::path(out_dir) / "mse_fs_grid.csv");
  fscsv << "alpha_true,model,s1,s2,mse\n";
  for (const StudyReport& rep : reports) {
    const int n1 = rep.scenario.n1;
    const int n2 = rep.scenario.n2;
    for (size_t m = 0; m < rep.models.size(); ++m) {
      const Mat& sq = rep.fs_sqerr[m];
      for (int i = 0; i < n1; ++i) {
        for (int j = 0; j < n2; ++j) {
          const int c = i * n2 + j;
          double acc = 0.0;
          int count = 0;
          for (int r = 0; r < sq.rows(); ++r) {
            if (std::isfinite(sq(r, c))) {
              acc += sq(r, c);
              ++count;
            }
          }
          fscsv << fmt(rep.scenario.alpha_true) << "," << to_string(rep.models[m]) << ","
                << fmt(static_cast<double>(i) / (n1 - 1)) << ","
                << fmt(static_cast<double>(j) / (n2 - 1)) << ","
                << fmt(count > 0 ? acc / count : NAN) << "\n";
        }
      }
    }
  }
}

}  // namespace gcstar
