#include "gcstar/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gcstar/errors.hpp"
#include "gcstar/likelihoods.hpp"

namespace gcstar {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw DomainError("cannot open " + path.string() + " for writing");
  f << text;
}

Mat read_matrix_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw DomainError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Mat(0, 0);
  Mat m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) {
      throw DomainError(path.string() + ": ragged rows");
    }
    for (size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    }
  }
  return m;
}

void write_matrix_csv(const fs::path& path, const Mat& m) {
  std::ofstream f(path);
  if (!f) throw DomainError("cannot open " + path.string() + " for writing");
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) f << ",";
      f << fmt(m(i, j));
    }
    f << "\n";
  }
}

}  // namespace

PriorSettings priors_from_config(const Config& cfg) {
  PriorSettings priors;
  priors.alpha_prior.lambda = cfg.get_double("priors.alpha.lambda", 1.0);
  priors.default_tau_prior.u_sigma = cfg.get_double("priors.tau.default.u", 1.0);
  priors.default_tau_prior.a_tail = cfg.get_double("priors.tau.default.a", 0.01);
  priors.nb_size_prior.u_sigma = cfg.get_double("priors.nb_size.u", 1.0);
  priors.nb_size_prior.a_tail = cfg.get_double("priors.nb_size.a", 0.01);
  priors.gp_phi_rate = cfg.get_double("priors.gp_phi.rate", priors.gp_phi_rate);
  // Per-block overrides: priors.tau.<block>.u / .a
  for (const auto& [key, value] : cfg.entries()) {
    (void)value;
    const std::string prefix = "priors.tau.";
    if (key.rfind(prefix, 0) != 0 || key.rfind(".u") != key.size() - 2) continue;
    const std::string block = key.substr(prefix.size(), key.size() - prefix.size() - 2);
    if (block == "default") continue;
    PcPrecisionPrior prior;
    prior.u_sigma = cfg.get_double(prefix + block + ".u", 1.0);
    prior.a_tail = cfg.get_double(prefix + block + ".a", 0.01);
    priors.tau_overrides[block] = prior;
  }
  return priors;
}

FitOptions fit_options_from_config(const Config& cfg) {
  FitOptions opts;
  const std::string mode = cfg.get_string("inference.mode", "auto");
  if (mode == "auto") opts.explore.mode = ExploreMode::Auto;
  else if (mode == "grid") opts.explore.mode = ExploreMode::Grid;
  else if (mode == "ccd") opts.explore.mode = ExploreMode::Ccd;
  else if (mode == "empirical_bayes") opts.explore.mode = ExploreMode::EmpiricalBayes;
  else throw DomainError("config: unknown inference.mode '" + mode + "'");
  opts.explore.grid_step = cfg.get_double("inference.grid_step", 0.75);
  opts.explore.log_drop = cfg.get_double("inference.log_drop", 6.0);
  opts.explore.newton.tol = cfg.get_double("inference.newton_tol", 1e-6);
  opts.explore.newton.max_iter =
      static_cast<int>(cfg.get_long("inference.newton_max_iter", 50));
  opts.n_pred_draws = static_cast<int>(cfg.get_long("inference.n_pred_draws", 1000));
  opts.seed = static_cast<std::uint64_t>(cfg.get_long("inference.seed", 42));
  return opts;
}

DesignOptions design_options_from_config(const Config& cfg) {
  DesignOptions opts;
  opts.fixed_prior_variance = cfg.get_double("priors.fixed.variance", 100.0);
  return opts;
}

void apply_data_directives(Dataset& data, const Config& cfg) {
  for (const std::string& item : cfg.get_list("data.transform")) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw DomainError("data.transform entries look like 'column:log', got '" + item + "'");
    }
    const std::string column = item.substr(0, colon);
    const std::string kind = item.substr(colon + 1);
    if (kind != "log") throw DomainError("unknown transform '" + kind + "'");
    log_transform_column(data, column);
  }
  const std::string offset_from = cfg.get_string("data.offset_from", "");
  if (!offset_from.empty()) set_offset_from_column(data, offset_from);
}

namespace {

json hyper_marginal_json(const HyperMarginal& m) {
  json grid = json::array();
  for (size_t i = 0; i < m.z_values.size(); ++i) {
    grid.push_back({{"z", m.z_values[i]}, {"weight", m.weights[i]}});
  }
  return json{{"name", m.name},
              {"mean", m.mean_natural},
              {"q025", m.q025_natural},
              {"q50", m.q50_natural},
              {"q975", m.q975_natural},
              {"mean_sigma", m.mean_sigma},
              {"degenerate", m.degenerate},
              {"grid", grid}};
}

}  // namespace

void write_fit_artifacts(const std::string& out_dir, const ModelSpec& spec,
                         const Dataset& data, const DesignAssembly& asm_,
                         const PriorSettings& priors, const FitOptions& opts,
                         const FitResult& fit, const Config& resolved) {
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  // summary.json
  json summary;
  summary["version"] = "gcstar 0.1.0";
  summary["seed"] = opts.seed;
  summary["likelihood"] = to_string(spec.likelihood);
  summary["n_rows"] = data.n_rows();
  summary["n_observed"] = data.n_observed();
  summary["latent_dim"] = asm_.latent_dim;

  json blocks = json::array();
  for (const LatentBlock& b : asm_.blocks) {
    json jb{{"name", b.name}, {"offset", b.offset}, {"size", b.size},
            {"penalized", b.penalized}};
    if (!b.bin_midpoints.empty()) jb["bin_midpoints"] = b.bin_midpoints;
    blocks.push_back(jb);
  }
  summary["blocks"] = blocks;

  json priors_meta;
  priors_meta["alpha.lambda"] = priors.alpha_prior.lambda;
  priors_meta["tau.default"] = {{"u", priors.default_tau_prior.u_sigma},
                                {"a", priors.default_tau_prior.a_tail}};
  for (const auto& [name, p] : priors.tau_overrides) {
    priors_meta["tau." + name] = {{"u", p.u_sigma}, {"a", p.a_tail}};
  }
  priors_meta["fixed.variance"] = asm_.fixed_prior_variance;
  if (spec.likelihood == LikelihoodKind::NegBin) {
    priors_meta["nb_size"] = {{"u", priors.nb_size_prior.u_sigma},
                              {"a", priors.nb_size_prior.a_tail},
                              {"note", "pc-precision form on size (sigma = size^-1/2)"}};
  }
  if (spec.likelihood == LikelihoodKind::GenPoisson) {
    priors_meta["gp_phi"] = {{"rate", priors.gp_phi_rate},
                             {"note", "exponential tail on phi; mean-parameterized Consul "
                                      "pmf with theta = exp(eta)*(1-phi)"}};
  }
  summary["priors"] = priors_meta;

  json hypers = json::array();
  for (const HyperMarginal& m : fit.hypers) hypers.push_back(hyper_marginal_json(m));
  summary["hyperparameters"] = hypers;
  json hyper_names = json::array();
  for (const std::string& n : fit.grid.layout.names) hyper_names.push_back(n);
  summary["hyper_layout"] = hyper_names;

  summary["criteria"] = {
      {"dic", fit.criteria.dic.dic},
      {"dic_p_d", fit.criteria.dic.p_d},
      {"dic_mean_deviance", fit.criteria.dic.mean_deviance},
      {"waic", fit.criteria.waic.waic},
      {"waic_p", fit.criteria.waic.p_waic},
      {"lppd", fit.criteria.waic.lppd},
      {"waic_unreliable_terms", fit.criteria.waic.unreliable_terms},
      {"ls", fit.criteria.cpo.ls},
      {"cpo_dominated_rows", fit.criteria.cpo.dominated_rows.size()},
  };
  summary["diagnostics"] = {
      {"grid_points", fit.diagnostics.grid_points},
      {"dropped_points", fit.diagnostics.dropped_points},
      {"clamp_events", fit.diagnostics.clamp_events},
      {"newton_iters_total", fit.diagnostics.newton_iters_total},
      {"all_converged", fit.diagnostics.all_converged},
  };
  summary["config"] = resolved.entries();
  write_text(dir / "summary.json", summary.dump(2) + "\n");

  // latent_marginals.csv
  {
    std::ostringstream out;
    out << "block,index,mean,sd,q025,q50,q975\n";
    for (const LatentBlock& b : asm_.blocks) {
      for (int j = 0; j < b.size; ++j) {
        const LatentMarginal& m = fit.latent[static_cast<size_t>(b.offset + j)];
        out << b.name << "," << j << "," << fmt(m.mean) << "," << fmt(m.sd) << ","
            << fmt(m.q025) << "," << fmt(m.q50) << "," << fmt(m.q975) << "\n";
      }
    }
    write_text(dir / "latent_marginals.csv", out.str());
  }

  // hyper_marginals.csv
  {
    std::ostringstream out;
    out << "name,mean,q025,q50,q975,mean_sigma,degenerate\n";
    for (const HyperMarginal& m : fit.hypers) {
      out << m.name << "," << fmt(m.mean_natural) << "," << fmt(m.q025_natural) << ","
          << fmt(m.q50_natural) << "," << fmt(m.q975_natural) << "," << fmt(m.mean_sigma)
          << "," << (m.degenerate ? 1 : 0) << "\n";
    }
    write_text(dir / "hyper_marginals.csv", out.str());
  }

  // fitted_curves.csv: smooth blocks on their bin midpoints.
  {
    std::ostringstream out;
    out << "block,covariate_value,mean,sd,q025,q50,q975\n";
    for (const LatentBlock& b : asm_.blocks) {
      if (b.type != BlockType::Smooth) continue;
      for (int j = 0; j < b.size; ++j) {
        const LatentMarginal& m = fit.latent[static_cast<size_t>(b.offset + j)];
        out << b.name << "," << fmt(b.bin_midpoints[static_cast<size_t>(j)]) << ","
            << fmt(m.mean) << "," << fmt(m.sd) << "," << fmt(m.q025) << "," << fmt(m.q50)
            << "," << fmt(m.q975) << "\n";
      }
    }
    write_text(dir / "fitted_curves.csv", out.str());
  }

  // spatial_field.csv: node (tps) or cell (rw2d) summaries.
  {
    std::ostringstream out;
    out << "index,s1,s2,mean,sd\n";
    const LatentBlock* spatial = asm_.find_block("spatial");
    if (spatial != nullptr) {
      for (int j = 0; j < spatial->size; ++j) {
        const LatentMarginal& m = fit.latent[static_cast<size_t>(spatial->offset + j)];
        double s1 = 0.0, s2 = 0.0;
        if (asm_.has_mesh) {
          s1 = asm_.mesh.vertices[static_cast<size_t>(j)].x;
          s2 = asm_.mesh.vertices[static_cast<size_t>(j)].y;
        } else if (spec.spatial) {
          s1 = static_cast<double>(j / spec.spatial->n2);
          s2 = static_cast<double>(j % spec.spatial->n2);
        }
        out << j << "," << fmt(s1) << "," << fmt(s2) << "," << fmt(m.mean) << ","
            << fmt(m.sd) << "\n";
      }
    }
    write_text(dir / "spatial_field.csv", out.str());
  }

  // cpo.csv: per observed row.
  {
    std::ostringstream out;
    out << "row,cpo\n";
    for (size_t i = 0; i < fit.criteria.cpo.cpo.size(); ++i) {
      out << asm_.observed_rows[i] + 1 << "," << fmt(fit.criteria.cpo.cpo[i]) << "\n";
    }
    write_text(dir / "cpo.csv", out.str());
  }

  // predictions.csv for missing-response rows.
  {
    std::ostringstream out;
    out << "row,mean,sd,q025,q975\n";
    for (const PredictionRow& p : fit.predictions) {
      out << p.row + 1 << "," << fmt(p.mean) << "," << fmt(p.sd) << "," << fmt(p.q025)
          << "," << fmt(p.q975) << "\n";
    }
    write_text(dir / "predictions.csv", out.str());
  }

  write_matrix_csv(dir / "draws_latent.csv", fit.draws.latent);
  write_matrix_csv(dir / "draws_hyper.csv", fit.draws.hyper);
  if (asm_.has_mesh) write_mesh_file(asm_.mesh, (dir / "mesh.txt").string());
  write_dataset_csv(data, (dir / "dataset.csv").string());
  write_text(dir / "config_resolved.ini", resolved.emit());
}

void run_fit(const std::string& data_path, const std::string& config_path,
             const std::string& out_dir, std::optional<std::uint64_t> seed_override) {
  Config cfg = Config::load(config_path);
  Dataset data = read_dataset_csv(data_path);
  apply_data_directives(data, cfg);
  const ModelSpec spec = ModelSpec::from_config(cfg);

  if (seed_override) cfg.set("inference.seed", std::to_string(*seed_override));
  const PriorSettings priors = priors_from_config(cfg);
  const FitOptions opts = fit_options_from_config(cfg);
  const DesignAssembly asm_ = build_design(spec, data, design_options_from_config(cfg));

  // Normalized config echo (parse -> emit round trip is the identity).
  Config resolved = cfg;
  spec.to_config(resolved);
  resolved.set("inference.seed", std::to_string(opts.seed));

  try {
    const FitResult fit = fit_model(asm_, priors, opts);
    write_fit_artifacts(out_dir, spec, data, asm_, priors, opts, fit, resolved);
  } catch (const std::exception& e) {
    // Partial diagnostics for post-mortem before the error propagates.
    fs::create_directories(out_dir);
    json err{{"error", e.what()}, {"config", resolved.entries()}};
    write_text(fs::path(out_dir) / "error.json", err.dump(2) + "\n");
    throw;
  }
}

void run_predict(const std::string& fit_dir, const std::string& data_path,
                 const std::string& out_dir) {
  const fs::path dir(fit_dir);
  std::ifstream sf(dir / "summary.json");
  if (!sf) throw DomainError("run_predict: " + fit_dir + " has no summary.json");
  json summary;
  sf >> summary;

  Config cfg;
  for (const auto& [key, value] : summary.at("config").items()) {
    cfg.set(key, value.get<std::string>());
  }
  const ModelSpec spec = ModelSpec::from_config(cfg);

  Dataset newdata = read_dataset_csv(data_path);
  apply_data_directives(newdata, cfg);

  const Mat latent_draws = read_matrix_csv(dir / "draws_latent.csv");
  const Mat hyper_draws = read_matrix_csv(dir / "draws_hyper.csv");
  const int n_draws = static_cast<int>(latent_draws.rows());
  if (n_draws < 1) throw DomainError("run_predict: no posterior draws in " + fit_dir);

  std::vector<std::string> hyper_names;
  for (const auto& n : summary.at("hyper_layout")) hyper_names.push_back(n.get<std::string>());
  const bool has_lik_hyper = likelihood_has_hyper(spec.likelihood);
  int iid_tau_col = -1;
  for (size_t k = 0; k < hyper_names.size(); ++k) {
    if (hyper_names[k] == "log_tau_iid") iid_tau_col = static_cast<int>(k);
  }

  // Rebuild the design row for each new location from the stored layout.
  const int n_new = static_cast<int>(newdata.n_rows());
  Mat a_new = Mat::Zero(n_new, static_cast<int>(latent_draws.cols()));

  TriMesh mesh;
  SparseMat tps_proj;
  bool has_tps = false;
  if (spec.spatial && spec.spatial->kind == SpatialTerm::Kind::Tps) {
    mesh = read_mesh_file((dir / "mesh.txt").string());
    std::vector<Point> locs;
    for (int i = 0; i < n_new; ++i) {
      locs.push_back({newdata.s1[static_cast<size_t>(i)], newdata.s2[static_cast<size_t>(i)]});
    }
    tps_proj = projector(mesh, locs);
    has_tps = true;
  }

  const Dataset fitted_data = read_dataset_csv((dir / "dataset.csv").string());

  for (const auto& jb : summary.at("blocks")) {
    const std::string name = jb.at("name").get<std::string>();
    const int offset = jb.at("offset").get<int>();
    const int size = jb.at("size").get<int>();
    if (name == "intercept") {
      for (int i = 0; i < n_new; ++i) a_new(i, offset) = 1.0;
    } else if (name.rfind("linear_", 0) == 0) {
      const std::string cov = name.substr(7);
      auto it = newdata.covariates.find(cov);
      if (it == newdata.covariates.end()) {
        throw DomainError("run_predict: new data lacks covariate '" + cov + "'");
      }
      for (int i = 0; i < n_new; ++i) a_new(i, offset) = it->second[static_cast<size_t>(i)];
    } else if (name.rfind("smooth_", 0) == 0) {
      const std::string cov = name.substr(7);
      auto it = newdata.covariates.find(cov);
      if (it == newdata.covariates.end()) {
        throw DomainError("run_predict: new data lacks covariate '" + cov + "'");
      }
      const auto mids = jb.at("bin_midpoints").get<std::vector<double>>();
      const double width = mids[1] - mids[0];
      const double lo = mids[0] - 0.5 * width;
      for (int i = 0; i < n_new; ++i) {
        int b = static_cast<int>(std::ceil((it->second[static_cast<size_t>(i)] - lo) / width)) - 1;
        b = std::clamp(b, 0, size - 1);
        a_new(i, offset + b) = 1.0;
      }
    } else if (name == "spatial") {
      if (!newdata.has_coords) throw DomainError("run_predict: new data lacks s1/s2");
      if (has_tps) {
        for (int k = 0; k < tps_proj.outerSize(); ++k) {
          for (SparseMat::InnerIterator it(tps_proj, k); it; ++it) {
            a_new(static_cast<int>(it.row()), offset + static_cast<int>(it.col())) = it.value();
          }
        }
      } else {
        // Lattice: coordinates must hit the fitted axis values.
        const int n1 = spec.spatial->n1;
        const int n2 = spec.spatial->n2;
        std::vector<double> ax1(fitted_data.s1.begin(), fitted_data.s1.end());
        std::vector<double> ax2(fitted_data.s2.begin(), fitted_data.s2.end());
        std::sort(ax1.begin(), ax1.end());
        ax1.erase(std::unique(ax1.begin(), ax1.end()), ax1.end());
        std::sort(ax2.begin(), ax2.end());
        ax2.erase(std::unique(ax2.begin(), ax2.end()), ax2.end());
        for (int i = 0; i < n_new; ++i) {
          auto match = [](const std::vector<double>& ax, double v) {
            for (size_t k = 0; k < ax.size(); ++k) {
              if (std::fabs(ax[k] - v) < 1e-9) return static_cast<int>(k);
            }
            return -1;
          };
          const int r = match(ax1, newdata.s1[static_cast<size_t>(i)]);
          const int c = match(ax2, newdata.s2[static_cast<size_t>(i)]);
          if (r < 0 || c < 0 || r >= n1 || c >= n2) {
            throw DomainError("run_predict: row " + std::to_string(i + 1) +
                              " does not lie on the fitted lattice");
          }
          a_new(i, offset + r * n2 + c) = 1.0;
        }
      }
    } else if (name == "iid") {
      // Fresh exchangeable effects are drawn per draw below.
      (void)size;
    }
  }

  Vec offset_new = Vec::Zero(n_new);
  for (int i = 0; i < n_new && !newdata.offset_log.empty(); ++i) {
    offset_new[i] = newdata.offset_log[static_cast<size_t>(i)];
  }

  const std::uint64_t seed = summary.at("seed").get<std::uint64_t>();
  Rng rng(seed, 0x70726564);
  Mat samples(n_draws, n_new);
  for (int s = 0; s < n_draws; ++s) {
    const Vec psi = latent_draws.row(s).transpose();
    Vec eta = a_new * psi + offset_new;
    if (iid_tau_col >= 0) {
      const double tau = std::exp(hyper_draws(s, iid_tau_col));
      const double sd = 1.0 / std::sqrt(tau);
      for (int i = 0; i < n_new; ++i) eta[i] += sd * rng.normal();
    }
    const double hyper = has_lik_hyper ? std::exp(hyper_draws(s, 0)) : 0.0;
    for (int i = 0; i < n_new; ++i) {
      samples(s, i) = sample_observation(spec.likelihood, eta[i], hyper, rng);
    }
  }

  fs::create_directories(out_dir);
  std::ostringstream out;
  out << "row,mean,sd,q025,q975\n";
  for (int i = 0; i < n_new; ++i) {
    Vec col = samples.col(i);
    const double mean = col.mean();
    const double sd = std::sqrt(std::max(col.cwiseAbs2().mean() - mean * mean, 0.0));
    std::vector<double> sorted(col.data(), col.data() + col.size());
    std::sort(sorted.begin(), sorted.end());
    auto q = [&sorted](double prob) {
      const double pos = prob * (static_cast<double>(sorted.size()) - 1.0);
      const size_t k = static_cast<size_t>(pos);
      if (k + 1 >= sorted.size()) return sorted.back();
      const double f = pos - static_cast<double>(k);
      return sorted[k] + f * (sorted[k + 1] - sorted[k]);
    };
    out << i + 1 << "," << fmt(mean) << "," << fmt(sd) << "," << fmt(q(0.025)) << ","
        << fmt(q(0.975)) << "\n";
  }
  write_text(fs::path(out_dir) / "predictions.csv", out.str());
}

}  // namespace gcstar
