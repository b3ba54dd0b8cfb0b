#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gcstar/artifacts.hpp"
#include "gcstar/errors.hpp"
#include "gcstar/gc.hpp"
#include "gcstar/rng.hpp"

using namespace gcstar;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

// Small GC dataset with two missing rows and coordinates.
void write_toy_inputs(const fs::path& dir) {
  fs::create_directories(dir);
  Rng rng(404, 0);
  std::ostringstream csv;
  csv << "y,s1,s2,x\n";
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      const double s1 = i / 4.0;
      const double s2 = j / 4.0;
      const double x = rng.uniform(-1.0, 1.0);
      const double eta = 0.3 + 0.5 * x;
      const GCParams p{1.0, std::exp(eta), 1.0};
      const bool missing = (i == 2 && j == 2) || (i == 4 && j == 1);
      if (missing) {
        csv << "";
      } else {
        csv << gc_sample(p, rng);
      }
      csv << "," << s1 << "," << s2 << "," << x << "\n";
    }
  }
  write_file(dir / "data.csv", csv.str());
  write_file(dir / "model.ini",
             "[model]\n"
             "likelihood = gc\n"
             "intercept = true\n"
             "linear = x\n"
             "spatial = rw2d:5x5\n"
             "[inference]\n"
             "mode = grid\n"
             "seed = 31\n"
             "n_pred_draws = 400\n");
}

}  // namespace

TEST_SUITE("artifacts and cli plumbing") {

TEST_CASE("config: parse, typed access, normalized emit") {
  const Config cfg = Config::parse(
      "# comment\n[model]\nlikelihood = gc\n\n[inference]\nseed = 7\ngrid_step = 0.5\n");
  CHECK(cfg.get_string("model.likelihood", "") == "gc");
  CHECK(cfg.get_long("inference.seed", 0) == 7);
  CHECK(cfg.get_double("inference.grid_step", 0.0) == 0.5);
  CHECK(cfg.get_bool("missing.key", true));
  CHECK_THROWS_AS(cfg.get_double("model.likelihood", 0.0), DomainError);
  CHECK_THROWS_AS(Config::parse("novalue\n"), DomainError);
  // emit -> parse -> emit is a fixed point
  const std::string once = cfg.emit();
  CHECK(Config::parse(once).emit() == once);
}

TEST_CASE("dataset csv: parse, missing markers, errors") {
  const Dataset d = parse_dataset_csv("y,offset_log,x\n3,0.1,1.5\n,0.2,2.5\n0,0.3,3.5\n");
  CHECK(d.n_rows() == 3);
  CHECK(d.n_observed() == 2);
  CHECK(d.y_missing[1]);
  CHECK(d.offset_log[2] == 0.3);
  CHECK(d.covariates.at("x")[0] == 1.5);
  CHECK_THROWS_AS(parse_dataset_csv("x,z\n1,2\n"), DomainError);       // no y
  CHECK_THROWS_AS(parse_dataset_csv("y,s1\n1,0.5\n"), DomainError);    // s1 without s2
  CHECK_THROWS_AS(parse_dataset_csv("y,x\n1\n"), DomainError);         // ragged
  CHECK_THROWS_AS(parse_dataset_csv("y,x\nfoo,1\n"), DomainError);     // bad number
}

TEST_CASE("data directives: log transform and offset_from") {
  Dataset d = parse_dataset_csv("y,area,pop\n1,2.0,100\n2,4.0,200\n");
  const Config cfg = Config::parse("[data]\ntransform = area:log\noffset_from = area\n");
  apply_data_directives(d, cfg);
  CHECK(d.offset_log[0] == doctest::Approx(std::log(2.0)));
  CHECK(d.offset_log[1] == doctest::Approx(std::log(4.0)));
  CHECK(d.covariates.count("area") == 0);
  CHECK(d.covariates.count("pop") == 1);
  Dataset neg = parse_dataset_csv("y,area\n1,-2.0\n");
  const Config cfg2 = Config::parse("[data]\ntransform = area:log\n");
  CHECK_THROWS_AS(apply_data_directives(neg, cfg2), DomainError);
}

TEST_CASE("run_fit writes the full artifact set; missing rows appear only in predictions") {
  const fs::path dir = "/tmp/gcstar_test_fit";
  fs::remove_all(dir);
  write_toy_inputs(dir);
  run_fit((dir / "data.csv").string(), (dir / "model.ini").string(),
          (dir / "out").string(), std::nullopt);

  for (const char* name :
       {"summary.json", "latent_marginals.csv", "hyper_marginals.csv", "fitted_curves.csv",
        "spatial_field.csv", "cpo.csv", "predictions.csv", "draws_latent.csv",
        "draws_hyper.csv", "dataset.csv", "config_resolved.ini"}) {
    CHECK(fs::exists(dir / "out" / name));
  }
  // Two missing rows, two prediction rows (dataset rows 13 and 22, 1-based).
  const std::string preds = slurp(dir / "out" / "predictions.csv");
  CHECK(preds == "row,mean,sd,q025,q975\n" + preds.substr(preds.find('\n') + 1));
  int lines = 0;
  for (char ch : preds) lines += ch == '\n';
  CHECK(lines == 3);
  CHECK(preds.find("13,") != std::string::npos);
  CHECK(preds.find("22,") != std::string::npos);
  // CPO rows only for observed entries.
  const std::string cpo = slurp(dir / "out" / "cpo.csv");
  int cpo_lines = -1;
  for (char ch : cpo) cpo_lines += ch == '\n';
  CHECK(cpo_lines == 23);
}

TEST_CASE("run_fit is byte-reproducible for a fixed seed") {
  const fs::path dir = "/tmp/gcstar_test_repro";
  fs::remove_all(dir);
  write_toy_inputs(dir);
  run_fit((dir / "data.csv").string(), (dir / "model.ini").string(), (dir / "a").string(),
          std::nullopt);
  run_fit((dir / "data.csv").string(), (dir / "model.ini").string(), (dir / "b").string(),
          std::nullopt);
  for (const char* name : {"summary.json", "latent_marginals.csv", "draws_latent.csv",
                           "predictions.csv", "hyper_marginals.csv"}) {
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  }
}

TEST_CASE("run_predict reconstructs rows from a fit directory") {
  const fs::path dir = "/tmp/gcstar_test_predict";
  fs::remove_all(dir);
  write_toy_inputs(dir);
  run_fit((dir / "data.csv").string(), (dir / "model.ini").string(), (dir / "out").string(),
          std::nullopt);
  // Rows on lattice points with in-range covariates.
  write_file(dir / "new.csv", "y,s1,s2,x\n,0.25,0.5,0.1\n,0.75,0.75,-0.4\n");
  run_predict((dir / "out").string(), (dir / "new.csv").string(), (dir / "pred").string());
  const std::string preds = slurp(dir / "pred" / "predictions.csv");
  int lines = -1;
  for (char ch : preds) lines += ch == '\n';
  CHECK(lines == 2);
  // Off-lattice coordinates are a user error.
  write_file(dir / "bad.csv", "y,s1,s2,x\n,0.3,0.5,0.1\n");
  CHECK_THROWS_AS(
      run_predict((dir / "out").string(), (dir / "bad.csv").string(), (dir / "p2").string()),
      DomainError);
}

TEST_CASE("tps fit end to end: artifacts, mesh reload, out-of-hull rejection") {
  const fs::path dir = "/tmp/gcstar_test_tps";
  fs::remove_all(dir);
  fs::create_directories(dir);
  Rng rng(909, 0);
  std::ostringstream csv;
  csv << "y,s1,s2\n";
  std::vector<std::pair<double, double>> sites;
  for (int i = 0; i < 40; ++i) {
    const double s1 = rng.uniform();
    const double s2 = rng.uniform();
    sites.emplace_back(s1, s2);
    const double eta = 0.4 + 0.6 * std::sin(3.0 * s1) * std::cos(3.0 * s2);
    const GCParams p{1.0, std::exp(eta), 1.0};
    if (i == 11) {
      csv << "";  // prediction-only site
    } else {
      csv << gc_sample(p, rng);
    }
    csv << "," << s1 << "," << s2 << "\n";
  }
  write_file(dir / "data.csv", csv.str());
  write_file(dir / "model.ini",
             "[model]\nlikelihood = gc\nintercept = true\nspatial = tps\n"
             "[mesh]\nmax_edge = 0.3\nhull_extension = 0.15\n"
             "[inference]\nseed = 5\nn_pred_draws = 300\n");
  run_fit((dir / "data.csv").string(), (dir / "model.ini").string(), (dir / "out").string(),
          std::nullopt);
  CHECK(fs::exists(dir / "out" / "mesh.txt"));
  const std::string preds = slurp(dir / "out" / "predictions.csv");
  CHECK(preds.find("12,") != std::string::npos);  // 1-based row of the missing site

  // Predict at fresh in-hull locations (centroid of three sites).
  const double cx = (sites[0].first + sites[1].first + sites[2].first) / 3.0;
  const double cy = (sites[0].second + sites[1].second + sites[2].second) / 3.0;
  std::ostringstream newcsv;
  newcsv << "y,s1,s2\n," << cx << "," << cy << "\n";
  write_file(dir / "new.csv", newcsv.str());
  run_predict((dir / "out").string(), (dir / "new.csv").string(), (dir / "pred").string());
  CHECK(fs::exists(dir / "pred" / "predictions.csv"));

  // Far-outside locations give a precise user error.
  write_file(dir / "far.csv", "y,s1,s2\n,40,40\n");
  CHECK_THROWS_AS(
      run_predict((dir / "out").string(), (dir / "far.csv").string(), (dir / "p3").string()),
      DomainError);
}

TEST_CASE("priors_from_config: defaults and per-block overrides") {
  const Config cfg = Config::parse(
      "[priors]\nalpha.lambda = 2.5\ntau.default.u = 3.0\ntau.default.a = 0.05\n"
      "tau.smooth_x.u = 0.5\ntau.smooth_x.a = 0.1\n");
  const PriorSettings p = priors_from_config(cfg);
  CHECK(p.alpha_prior.lambda == 2.5);
  CHECK(p.default_tau_prior.u_sigma == 3.0);
  CHECK(p.tau_prior_for("spatial").u_sigma == 3.0);
  CHECK(p.tau_prior_for("smooth_x").u_sigma == 0.5);
  CHECK(p.tau_prior_for("smooth_x").a_tail == 0.1);
}

}  // TEST_SUITE
