#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "gcstar/config.hpp"
#include "gcstar/dataset.hpp"
#include "gcstar/fit.hpp"
#include "gcstar/model.hpp"

namespace gcstar {

PriorSettings priors_from_config(const Config& cfg);
FitOptions fit_options_from_config(const Config& cfg);
DesignOptions design_options_from_config(const Config& cfg);

// Ingestion directives from the [data] section (log transforms, offset).
void apply_data_directives(Dataset& data, const Config& cfg);

// Writes the full artifact set for a completed fit into out_dir:
// summary.json, latent_marginals.csv, hyper_marginals.csv,
// fitted_curves.csv, spatial_field.csv, cpo.csv, predictions.csv,
// draws_latent.csv, draws_hyper.csv, mesh.txt (tps), dataset.csv,
// config_resolved.ini.
void write_fit_artifacts(const std::string& out_dir, const ModelSpec& spec,
                         const Dataset& data, const DesignAssembly& asm_,
                         const PriorSettings& priors, const FitOptions& opts,
                         const FitResult& fit, const Config& resolved);

// Fit a dataset + config and write artifacts; the library-level body of
// the `fit` CLI command.
void run_fit(const std::string& data_path, const std::string& config_path,
             const std::string& out_dir, std::optional<std::uint64_t> seed_override);

// Predict new rows from a completed fit directory (draws + layout are
// reloaded; no refit).  Writes predictions.csv into out_dir.
void run_predict(const std::string& fit_dir, const std::string& data_path,
                 const std::string& out_dir);

}  // namespace gcstar
