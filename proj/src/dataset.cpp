#include "gcstar/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gcstar/errors.hpp"

namespace gcstar {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

double parse_number(const std::string& cell, const std::string& origin, size_t line_no,
                    const std::string& column) {
  try {
    size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw DomainError(origin + ":" + std::to_string(line_no) + ": column '" + column +
                      "': cannot parse '" + cell + "' as a number");
  }
}

}  // namespace

std::size_t Dataset::n_observed() const {
  std::size_t n = 0;
  for (bool m : y_missing) {
    if (!m) ++n;
  }
  return n;
}

void Dataset::validate(bool integer_y) const {
  const std::size_t n = n_rows();
  if (y_missing.size() != n) throw DomainError("Dataset: y_missing length mismatch");
  if (!offset_log.empty() && offset_log.size() != n) {
    throw DomainError("Dataset: offset_log length mismatch");
  }
  if (has_coords && (s1.size() != n || s2.size() != n)) {
    throw DomainError("Dataset: coordinate length mismatch");
  }
  for (const auto& [name, col] : covariates) {
    if (col.size() != n) throw DomainError("Dataset: column '" + name + "' length mismatch");
    for (double v : col) {
      if (!std::isfinite(v)) throw DomainError("Dataset: non-finite value in '" + name + "'");
    }
  }
  for (double v : offset_log) {
    if (!std::isfinite(v)) throw DomainError("Dataset: non-finite offset");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (y_missing[i]) continue;
    if (!std::isfinite(y[i])) {
      throw DomainError("Dataset: row " + std::to_string(i + 1) + ": y must be finite");
    }
    if (integer_y && (y[i] < 0.0 || y[i] != std::floor(y[i]))) {
      throw DomainError("Dataset: row " + std::to_string(i + 1) +
                        ": y must be a nonnegative integer count");
    }
  }
}

Dataset parse_dataset_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DomainError(origin + ": empty file");
  const std::vector<std::string> header = split_csv_line(line);

  int y_col = -1, off_col = -1, s1_col = -1, s2_col = -1;
  std::vector<std::pair<int, std::string>> cov_cols;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string& h = header[static_cast<size_t>(c)];
    if (h == "y") y_col = c;
    else if (h == "offset_log") off_col = c;
    else if (h == "s1") s1_col = c;
    else if (h == "s2") s2_col = c;
    else if (h.empty()) throw DomainError(origin + ":1: empty column name in header");
    else cov_cols.emplace_back(c, h);
  }
  if (y_col < 0) throw DomainError(origin + ":1: required column 'y' is missing");
  if ((s1_col < 0) != (s2_col < 0)) {
    throw DomainError(origin + ":1: coordinates need both 's1' and 's2'");
  }

  Dataset data;
  data.has_coords = s1_col >= 0;
  if (off_col >= 0) data.offset_log.clear();
  for (const auto& [c, name] : cov_cols) data.covariates[name] = {};

  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DomainError(origin + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " cells, found " +
                        std::to_string(cells.size()));
    }
    const std::string& y_cell = cells[static_cast<size_t>(y_col)];
    if (y_cell.empty() || y_cell == "NA") {
      data.y.push_back(0.0);
      data.y_missing.push_back(true);
    } else {
      data.y.push_back(parse_number(y_cell, origin, line_no, "y"));
      data.y_missing.push_back(false);
    }
    if (off_col >= 0) {
      data.offset_log.push_back(
          parse_number(cells[static_cast<size_t>(off_col)], origin, line_no, "offset_log"));
    }
    if (data.has_coords) {
      data.s1.push_back(parse_number(cells[static_cast<size_t>(s1_col)], origin, line_no, "s1"));
      data.s2.push_back(parse_number(cells[static_cast<size_t>(s2_col)], origin, line_no, "s2"));
    }
    for (const auto& [c, name] : cov_cols) {
      data.covariates[name].push_back(
          parse_number(cells[static_cast<size_t>(c)], origin, line_no, name));
    }
  }
  if (data.y.empty()) throw DomainError(origin + ": no data rows");
  return data;
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DomainError("cannot open dataset file " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_dataset_csv(buf.str(), path);
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DomainError("cannot open " + path + " for writing");
  f << "y";
  if (!data.offset_log.empty()) f << ",offset_log";
  if (data.has_coords) f << ",s1,s2";
  for (const auto& [name, col] : data.covariates) f << "," << name;
  f << "\n";
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    if (!data.y_missing[i]) f << num(data.y[i]);
    if (!data.offset_log.empty()) f << "," << num(data.offset_log[i]);
    if (data.has_coords) f << "," << num(data.s1[i]) << "," << num(data.s2[i]);
    for (const auto& [name, col] : data.covariates) f << "," << num(col[i]);
    f << "\n";
  }
}

void log_transform_column(Dataset& data, const std::string& column) {
  auto it = data.covariates.find(column);
  if (it == data.covariates.end()) {
    throw DomainError("log transform: unknown column '" + column + "'");
  }
  for (double& v : it->second) {
    if (!(v > 0.0)) {
      throw DomainError("log transform: column '" + column + "' has non-positive value");
    }
    v = std::log(v);
  }
}

void set_offset_from_column(Dataset& data, const std::string& column) {
  auto it = data.covariates.find(column);
  if (it == data.covariates.end()) {
    throw DomainError("offset: unknown column '" + column + "'");
  }
  data.offset_log = it->second;
  data.covariates.erase(it);
}

}  // namespace gcstar
