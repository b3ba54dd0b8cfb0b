#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gcstar/artifacts.hpp"
#include "gcstar/errors.hpp"
#include "gcstar/gc.hpp"
#include "gcstar/simstudy.hpp"

namespace {

// Exit codes: 0 success, 2 user/config error, 3 numerical failure.
int guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const gcstar::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct Range {
  std::int64_t lo = 0;
  std::int64_t hi = 10;
};

Range parse_range(const std::string& text) {
  Range r;
  const auto dots = text.find("..");
  if (dots == std::string::npos) {
    r.lo = r.hi = std::stoll(text);
  } else {
    r.lo = std::stoll(text.substr(0, dots));
    r.hi = std::stoll(text.substr(dots + 2));
  }
  if (r.hi < r.lo) throw gcstar::DomainError("bad range '" + text + "'");
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian semi-parametric spatial regression for dispersed counts "
               "(gamma-count likelihood, IGMRF/TPS smoothing, nested-Laplace inference)"};
  app.require_subcommand(1);

  // fit
  std::string fit_data, fit_config, fit_out = "fit_out";
  std::optional<std::uint64_t> fit_seed;
  auto* fit = app.add_subcommand("fit", "Fit a model config to a dataset");
  fit->add_option("--data", fit_data, "dataset CSV (columns: y[,offset_log,s1,s2,...covariates])")
      ->required();
  fit->add_option("--config", fit_config, "model config file")->required();
  fit->add_option("--out", fit_out, "output directory");
  fit->add_option("--seed", fit_seed, "override inference.seed");

  // predict
  std::string pred_fit_dir, pred_data, pred_out = "predict_out";
  auto* predict = app.add_subcommand("predict", "Predict new rows from a completed fit");
  predict->add_option("--fit", pred_fit_dir, "completed fit directory")->required();
  predict->add_option("--data", pred_data, "CSV of rows to predict")->required();
  predict->add_option("--out", pred_out, "output directory");

  // simulate
  std::string sim_out = "sim_out";
  std::string sim_profile = "desk";
  std::string sim_models = "gc,poisson,negbin";
  std::uint64_t sim_seed = 20240501;
  int sim_reps = -1;
  auto* simulate = app.add_subcommand("simulate", "Run the dispersion simulation study");
  simulate->add_option("--out", sim_out, "output directory");
  simulate->add_option("--profile", sim_profile, "desk (10x10, R=20) or paper (20x20, R=100)")
      ->check(CLI::IsMember({"desk", "paper"}));
  simulate->add_option("--models", sim_models, "comma list of gc,poisson,negbin,genpoisson");
  simulate->add_option("--seed", sim_seed, "master seed");
  simulate->add_option("--reps", sim_reps, "override replicate count");

  // dist
  std::string dist_fn = "pmf";
  double dist_alpha = 1.0, dist_beta = 1.0;
  std::string dist_n = "0..10";
  double dist_tmax = 5.0;
  int dist_points = 50;
  std::uint64_t dist_seed = 1;
  std::int64_t dist_draws = 10;
  auto* dist = app.add_subcommand("dist", "Gamma-count distribution tables");
  dist->add_option("function", dist_fn, "pmf | mean | variance | hazard | sample")
      ->check(CLI::IsMember({"pmf", "mean", "variance", "hazard", "sample"}));
  dist->add_option("--alpha", dist_alpha, "dispersion parameter")->required();
  dist->add_option("--beta", dist_beta, "rate parameter")->required();
  dist->add_option("--n", dist_n, "count range for pmf, e.g. 0..10");
  dist->add_option("--tmax", dist_tmax, "hazard grid upper end");
  dist->add_option("--points", dist_points, "hazard grid size");
  dist->add_option("--seed", dist_seed, "sampling seed");
  dist->add_option("--draws", dist_draws, "number of sample draws");

  CLI11_PARSE(app, argc, argv);

  if (*fit) {
    return guarded([&] { gcstar::run_fit(fit_data, fit_config, fit_out, fit_seed); });
  }
  if (*predict) {
    return guarded([&] { gcstar::run_predict(pred_fit_dir, pred_data, pred_out); });
  }
  if (*simulate) {
    return guarded([&] {
      gcstar::StudyOptions opts;
      opts.models.clear();
      std::string cur;
      for (char ch : sim_models + ",") {
        if (ch == ',') {
          if (!cur.empty()) opts.models.push_back(gcstar::likelihood_kind_from_string(cur));
          cur.clear();
        } else {
          cur += ch;
        }
      }
      const bool paper = sim_profile == "paper";
      std::vector<gcstar::StudyReport> reports;
      for (double alpha : {1.5, 1.0, 0.4}) {
        gcstar::Scenario sc;
        sc.alpha_true = alpha;
        sc.n1 = sc.n2 = paper ? 20 : 10;
        sc.n_reps = sim_reps > 0 ? sim_reps : (paper ? 100 : 20);
        sc.seed = sim_seed;
        reports.push_back(gcstar::run_study(sc, opts));
      }
      gcstar::write_study_csvs(reports, sim_out);
      int failures = 0;
      for (const auto& r : reports) failures += r.failures;
      std::cout << "simulation study complete; " << failures << " failed fits (see "
                << sim_out << "/study_replicates.csv)\n";
    });
  }
  if (*dist) {
    return guarded([&] {
      const gcstar::GCParams p{dist_alpha, dist_beta, 1.0};
      if (dist_fn == "pmf") {
        const Range r = parse_range(dist_n);
        std::cout << "n,pmf\n";
        for (std::int64_t n = r.lo; n <= r.hi; ++n) {
          std::cout << n << "," << fmt(gcstar::gc_pmf(n, p)) << "\n";
        }
      } else if (dist_fn == "mean") {
        const auto m = gcstar::gc_mean(p);
        std::cout << "mean,truncation_bound,terms\n"
                  << fmt(m.value) << "," << fmt(m.truncation_bound) << "," << m.terms << "\n";
      } else if (dist_fn == "variance") {
        const auto v = gcstar::gc_variance(p);
        std::cout << "variance,truncation_bound\n"
                  << fmt(v.value) << "," << fmt(v.truncation_bound) << "\n";
      } else if (dist_fn == "hazard") {
        std::cout << "t,hazard\n";
        for (int i = 1; i <= dist_points; ++i) {
          const double t = dist_tmax * i / dist_points;
          std::cout << fmt(t) << "," << fmt(gcstar::gamma_hazard(t, dist_alpha, dist_beta))
                    << "\n";
        }
      } else if (dist_fn == "sample") {
        gcstar::Rng rng(dist_seed, 0);
        std::cout << "draw\n";
        for (std::int64_t i = 0; i < dist_draws; ++i) {
          std::cout << gcstar::gc_sample(p, rng) << "\n";
        }
      }
    });
  }
  return 0;
}
