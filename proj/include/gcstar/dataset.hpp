#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gcstar {

// Rectangular observation table.  `y` may carry missing markers
// (prediction-only rows); every other column must be complete.
struct Dataset {
  std::vector<double> y;
  std::vector<bool> y_missing;
  std::vector<double> offset_log;            // zero when absent
  std::map<std::string, std::vector<double>> covariates;
  std::vector<double> s1, s2;                // empty when no coordinates
  bool has_coords = false;

  std::size_t n_rows() const { return y.size(); }
  std::size_t n_observed() const;
  void validate(bool integer_y = true) const;
};

// CSV schema: header row; required column `y` (empty cell = missing);
// optional `offset_log`, `s1`, `s2`; remaining columns are covariates.
Dataset read_dataset_csv(const std::string& path);
Dataset parse_dataset_csv(const std::string& text, const std::string& origin = "<memory>");
void write_dataset_csv(const Dataset& data, const std::string& path);

// In-place natural-log transform of a covariate column (used for log
// population / log exposure-area style ingestion).
void log_transform_column(Dataset& data, const std::string& column);

// Copy a covariate column into offset_log and drop it from the covariates.
void set_offset_from_column(Dataset& data, const std::string& column);

}  // namespace gcstar
