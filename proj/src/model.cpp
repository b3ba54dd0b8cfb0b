#include "gcstar/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "gcstar/errors.hpp"

namespace gcstar {

namespace {

std::string rw_order_name(RwOrder o) { return o == RwOrder::Rw1 ? "rw1" : "rw2"; }

RwOrder rw_order_from(const std::string& s) {
  if (s == "rw1") return RwOrder::Rw1;
  if (s == "rw2") return RwOrder::Rw2;
  throw DomainError("unknown random-walk order '" + s + "'");
}

// smooth term syntax: "covariate" or "covariate:rw1|rw2" or
// "covariate:rw2:25".
SmoothTerm parse_smooth(const std::string& text) {
  SmoothTerm term;
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : text) {
    if (ch == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  if (parts.empty() || parts[0].empty()) throw DomainError("smooth term: empty covariate");
  term.covariate = parts[0];
  if (parts.size() > 1) term.prior_kind = rw_order_from(parts[1]);
  if (parts.size() > 2) term.n_bins = std::stoi(parts[2]);
  if (parts.size() > 3) throw DomainError("smooth term '" + text + "': too many fields");
  return term;
}

}  // namespace

void ModelSpec::validate() const {
  std::set<std::string> linear(linear_terms.begin(), linear_terms.end());
  if (linear.size() != linear_terms.size()) {
    throw DomainError("ModelSpec: duplicate linear term");
  }
  std::set<std::string> smooth_names;
  for (const SmoothTerm& s : smooth_terms) {
    if (!smooth_names.insert(s.covariate).second) {
      throw DomainError("ModelSpec: duplicate smooth term '" + s.covariate + "'");
    }
    if (linear.count(s.covariate)) {
      throw DomainError("ModelSpec: covariate '" + s.covariate +
                        "' appears in both linear and smooth lists");
    }
    if (s.n_bins < 3) throw DomainError("ModelSpec: smooth needs n_bins >= 3");
  }
  if (spatial && spatial->kind == SpatialTerm::Kind::Rw2d &&
      (spatial->n1 < 3 || spatial->n2 < 3)) {
    throw DomainError("ModelSpec: rw2d lattice needs n1, n2 >= 3");
  }
}

ModelSpec ModelSpec::from_config(const Config& cfg) {
  ModelSpec spec;
  spec.likelihood = likelihood_kind_from_string(cfg.get_string("model.likelihood", "gc"));
  spec.intercept = cfg.get_bool("model.intercept", true);
  spec.linear_terms = cfg.get_list("model.linear");
  for (const std::string& s : cfg.get_list("model.smooth")) {
    spec.smooth_terms.push_back(parse_smooth(s));
  }
  const std::string spatial = cfg.get_string("model.spatial", "none");
  if (spatial != "none" && !spatial.empty()) {
    SpatialTerm term;
    if (spatial == "tps") {
      term.kind = SpatialTerm::Kind::Tps;
      term.max_edge = cfg.get_double("mesh.max_edge", 0.0);
      term.hull_extension = cfg.get_double("mesh.hull_extension", -1.0);
    } else if (spatial.rfind("rw2d", 0) == 0) {
      term.kind = SpatialTerm::Kind::Rw2d;
      // "rw2d:<n1>x<n2>"
      const auto colon = spatial.find(':');
      if (colon == std::string::npos) {
        throw DomainError("spatial rw2d needs a lattice shape, e.g. rw2d:20x20");
      }
      const std::string shape = spatial.substr(colon + 1);
      const auto x = shape.find('x');
      if (x == std::string::npos) throw DomainError("bad rw2d shape '" + shape + "'");
      term.n1 = std::stoi(shape.substr(0, x));
      term.n2 = std::stoi(shape.substr(x + 1));
      const std::string variant = cfg.get_string("model.rw2d_variant", "paper");
      if (variant == "paper") {
        term.variant = Rw2dVariant::Paper;
      } else if (variant == "squared_laplacian") {
        term.variant = Rw2dVariant::SquaredLaplacian;
      } else {
        throw DomainError("unknown rw2d_variant '" + variant + "'");
      }
    } else {
      throw DomainError("unknown spatial term '" + spatial + "'");
    }
    spec.spatial = term;
  }
  spec.iid_term = cfg.get_bool("model.iid", false);
  spec.validate();
  return spec;
}

void ModelSpec::to_config(Config& cfg) const {
  cfg.set("model.likelihood", to_string(likelihood));
  cfg.set("model.intercept", intercept ? "true" : "false");
  if (!linear_terms.empty()) {
    std::string joined;
    for (const std::string& t : linear_terms) {
      if (!joined.empty()) joined += ", ";
      joined += t;
    }
    cfg.set("model.linear", joined);
  }
  if (!smooth_terms.empty()) {
    std::string joined;
    for (const SmoothTerm& s : smooth_terms) {
      if (!joined.empty()) joined += ", ";
      joined += s.covariate + ":" + rw_order_name(s.prior_kind) + ":" +
                std::to_string(s.n_bins);
    }
    cfg.set("model.smooth", joined);
  }
  if (spatial) {
    if (spatial->kind == SpatialTerm::Kind::Tps) {
      cfg.set("model.spatial", "tps");
    } else {
      cfg.set("model.spatial", "rw2d:" + std::to_string(spatial->n1) + "x" +
                                   std::to_string(spatial->n2));
      cfg.set("model.rw2d_variant", spatial->variant == Rw2dVariant::Paper
                                        ? "paper"
                                        : "squared_laplacian");
    }
  } else {
    cfg.set("model.spatial", "none");
  }
  cfg.set("model.iid", iid_term ? "true" : "false");
}

BinnedCovariate bin_covariate(const std::vector<double>& values, int n_bins) {
  if (n_bins < 3) throw DomainError("bin_covariate: need n_bins >= 3");
  if (values.empty()) throw DomainError("bin_covariate: empty column");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) throw DomainError("bin_covariate: covariate is constant");

  std::set<double> distinct(values.begin(), values.end());
  const int m = std::min<int>(n_bins, static_cast<int>(distinct.size()));
  if (m < 3) throw DomainError("bin_covariate: fewer than 3 distinct values");

  const double width = (hi - lo) / m;
  BinnedCovariate out;
  out.group.reserve(values.size());
  for (double v : values) {
    const double u = (v - lo) / width;
    int b = static_cast<int>(std::ceil(u)) - 1;
    b = std::clamp(b, 0, m - 1);
    out.group.push_back(b);
  }
  out.midpoint.resize(static_cast<size_t>(m));
  for (int b = 0; b < m; ++b) {
    out.midpoint[static_cast<size_t>(b)] = lo + (b + 0.5) * width;
  }
  return out;
}

int DesignAssembly::n_penalized_blocks() const {
  int n = 0;
  for (const LatentBlock& b : blocks) {
    if (b.penalized) ++n;
  }
  return n;
}

const LatentBlock* DesignAssembly::find_block(const std::string& name) const {
  for (const LatentBlock& b : blocks) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

namespace {

const std::vector<double>& covariate_column(const Dataset& data, const std::string& name) {
  auto it = data.covariates.find(name);
  if (it == data.covariates.end()) {
    throw DomainError("build_design: unknown covariate '" + name + "'");
  }
  return it->second;
}

// Map coordinates to lattice cell indices (row-major, s1 -> rows).
std::vector<int> lattice_cells(const Dataset& data, int n1, int n2) {
  auto axis_values = [](const std::vector<double>& coord, int expected,
                        const char* which) {
    std::vector<double> uniq(coord.begin(), coord.end());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (static_cast<int>(uniq.size()) != expected) {
      throw DomainError(std::string("build_design: rw2d lattice mismatch: ") + which +
                        " has " + std::to_string(uniq.size()) + " distinct values, lattice needs " +
                        std::to_string(expected));
    }
    return uniq;
  };
  const std::vector<double> rows = axis_values(data.s1, n1, "s1");
  const std::vector<double> cols = axis_values(data.s2, n2, "s2");
  std::vector<int> cell(data.n_rows());
  for (size_t i = 0; i < data.n_rows(); ++i) {
    const auto r = std::lower_bound(rows.begin(), rows.end(), data.s1[i]) - rows.begin();
    const auto c = std::lower_bound(cols.begin(), cols.end(), data.s2[i]) - cols.begin();
    cell[i] = static_cast<int>(r) * n2 + static_cast<int>(c);
  }
  return cell;
}

}  // namespace

DesignAssembly build_design(const ModelSpec& spec, const Dataset& data,
                            const DesignOptions& opts) {
  spec.validate();
  data.validate(spec.likelihood != LikelihoodKind::Gaussian);
  const int n = static_cast<int>(data.n_rows());

  DesignAssembly asm_;
  asm_.likelihood = spec.likelihood;
  asm_.fixed_prior_variance = opts.fixed_prior_variance;

  std::vector<Eigen::Triplet<double>> trips;
  struct PendingConstraint {
    int offset;
    Vec row;
  };
  std::vector<PendingConstraint> pending;

  int cursor = 0;
  auto add_fixed = [&](const std::string& name) {
    LatentBlock b;
    b.name = name;
    b.type = BlockType::Fixed;
    b.offset = cursor;
    b.size = 1;
    b.penalized = false;
    asm_.blocks.push_back(std::move(b));
    cursor += 1;
  };

  if (spec.intercept) {
    add_fixed("intercept");
    for (int i = 0; i < n; ++i) trips.emplace_back(i, asm_.blocks.back().offset, 1.0);
  }
  for (const std::string& name : spec.linear_terms) {
    const auto& col = covariate_column(data, name);
    add_fixed("linear_" + name);
    const int off = asm_.blocks.back().offset;
    for (int i = 0; i < n; ++i) trips.emplace_back(i, off, col[static_cast<size_t>(i)]);
  }

  std::set<std::string> linear_set(spec.linear_terms.begin(), spec.linear_terms.end());
  for (const SmoothTerm& term : spec.smooth_terms) {
    const auto& col = covariate_column(data, term.covariate);
    const BinnedCovariate binned = bin_covariate(col, term.n_bins);
    const int m = static_cast<int>(binned.midpoint.size());

    LatentBlock b;
    b.name = "smooth_" + term.covariate;
    b.type = BlockType::Smooth;
    b.offset = cursor;
    b.size = m;
    b.penalized = true;
    b.prior = scale_to_unit_gv(term.prior_kind == RwOrder::Rw1 ? rw1_precision(m)
                                                               : rw2_precision(m));
    b.gen_logdet = generalized_log_det(b.prior);
    b.bin_midpoints = binned.midpoint;
    for (int i = 0; i < n; ++i) {
      trips.emplace_back(i, cursor + binned.group[static_cast<size_t>(i)], 1.0);
    }
    pending.push_back({cursor, Vec::Ones(m)});
    if (term.prior_kind == RwOrder::Rw2 && linear_set.count(term.covariate)) {
      // The linear null direction would be confounded with the explicit
      // linear effect; pin it.
      Vec lin(m);
      for (int j = 0; j < m; ++j) lin[j] = static_cast<double>(j + 1) - 0.5 * (m + 1);
      pending.push_back({cursor, lin});
    }
    asm_.blocks.push_back(std::move(b));
    cursor += m;
  }

  if (spec.spatial) {
    LatentBlock b;
    b.name = "spatial";
    b.type = BlockType::Spatial;
    b.offset = cursor;
    b.penalized = true;
    if (spec.spatial->kind == SpatialTerm::Kind::Rw2d) {
      if (!data.has_coords) throw DomainError("build_design: rw2d needs s1/s2 coordinates");
      const int n1 = spec.spatial->n1;
      const int n2 = spec.spatial->n2;
      b.size = n1 * n2;
      b.prior = scale_to_unit_gv(rw2d_precision(n1, n2, spec.spatial->variant));
      const std::vector<int> cell = lattice_cells(data, n1, n2);
      for (int i = 0; i < n; ++i) {
        trips.emplace_back(i, cursor + cell[static_cast<size_t>(i)], 1.0);
      }
    } else {
      if (!data.has_coords) throw DomainError("build_design: tps needs s1/s2 coordinates");
      std::vector<Point> sites(static_cast<size_t>(n));
      double lo_x = data.s1[0], hi_x = data.s1[0], lo_y = data.s2[0], hi_y = data.s2[0];
      for (int i = 0; i < n; ++i) {
        sites[static_cast<size_t>(i)] = {data.s1[static_cast<size_t>(i)],
                                         data.s2[static_cast<size_t>(i)]};
        lo_x = std::min(lo_x, sites[static_cast<size_t>(i)].x);
        hi_x = std::max(hi_x, sites[static_cast<size_t>(i)].x);
        lo_y = std::min(lo_y, sites[static_cast<size_t>(i)].y);
        hi_y = std::max(hi_y, sites[static_cast<size_t>(i)].y);
      }
      const double diag = std::hypot(hi_x - lo_x, hi_y - lo_y);
      MeshOptions mopts;
      mopts.max_edge = spec.spatial->max_edge > 0.0 ? spec.spatial->max_edge : diag / 20.0;
      mopts.hull_extension = spec.spatial->hull_extension >= 0.0
                                 ? spec.spatial->hull_extension
                                 : 0.2 * diag;
      asm_.mesh = build_mesh(sites, mopts);
      asm_.has_mesh = true;
      b.size = asm_.mesh.n_vertices();
      b.prior = scale_to_unit_gv(tps_precision(assemble_fem(asm_.mesh)));
      const SparseMat proj = projector(asm_.mesh, sites);
      for (int k = 0; k < proj.outerSize(); ++k) {
        for (SparseMat::InnerIterator it(proj, k); it; ++it) {
          trips.emplace_back(static_cast<int>(it.row()), cursor + static_cast<int>(it.col()),
                             it.value());
        }
      }
    }
    b.gen_logdet = generalized_log_det(b.prior);
    pending.push_back({cursor, Vec::Ones(b.size)});
    const int sz = b.size;
    asm_.blocks.push_back(std::move(b));
    cursor += sz;
  }

  if (spec.iid_term) {
    LatentBlock b;
    b.name = "iid";
    b.type = BlockType::Iid;
    b.offset = cursor;
    b.size = n;
    b.penalized = true;
    b.prior = iid_precision(n);
    b.gen_logdet = 0.0;
    for (int i = 0; i < n; ++i) trips.emplace_back(i, cursor + i, 1.0);
    asm_.blocks.push_back(std::move(b));
    cursor += n;
  }

  asm_.latent_dim = cursor;
  if (cursor == 0) throw DomainError("build_design: model has no terms");

  asm_.A = SparseMat(n, cursor);
  asm_.A.setFromTriplets(trips.begin(), trips.end());
  asm_.A.makeCompressed();

  asm_.offset = Vec::Zero(n);
  if (!data.offset_log.empty()) {
    for (int i = 0; i < n; ++i) asm_.offset[i] = data.offset_log[static_cast<size_t>(i)];
  }

  for (int i = 0; i < n; ++i) {
    if (data.y_missing[static_cast<size_t>(i)]) {
      asm_.prediction_rows.push_back(i);
    } else {
      asm_.observed_rows.push_back(i);
    }
  }
  if (asm_.observed_rows.empty()) throw DomainError("build_design: no observed rows");

  const int n_obs = static_cast<int>(asm_.observed_rows.size());
  asm_.y_obs = Vec(n_obs);
  asm_.offset_obs = Vec(n_obs);
  std::vector<Eigen::Triplet<double>> obs_trips;
  std::vector<int> row_to_obs(static_cast<size_t>(n), -1);
  for (int j = 0; j < n_obs; ++j) {
    const int r = asm_.observed_rows[static_cast<size_t>(j)];
    row_to_obs[static_cast<size_t>(r)] = j;
    asm_.y_obs[j] = data.y[static_cast<size_t>(r)];
    asm_.offset_obs[j] = asm_.offset[r];
  }
  for (int k = 0; k < asm_.A.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(asm_.A, k); it; ++it) {
      const int j = row_to_obs[static_cast<size_t>(it.row())];
      if (j >= 0) obs_trips.emplace_back(j, static_cast<int>(it.col()), it.value());
    }
  }
  asm_.A_obs = SparseMat(n_obs, cursor);
  asm_.A_obs.setFromTriplets(obs_trips.begin(), obs_trips.end());
  asm_.A_obs.makeCompressed();

  asm_.constraints = Mat::Zero(static_cast<int>(pending.size()), cursor);
  for (size_t k = 0; k < pending.size(); ++k) {
    asm_.constraints.block(static_cast<int>(k), pending[k].offset, 1,
                           static_cast<int>(pending[k].row.size())) =
        pending[k].row.transpose();
  }
  std::vector<Eigen::Triplet<double>> outer_trips;
  for (const PendingConstraint& pc : pending) {
    const int m = static_cast<int>(pc.row.size());
    for (int i = 0; i < m; ++i) {
      if (pc.row[i] == 0.0) continue;
      for (int j = 0; j < m; ++j) {
        if (pc.row[j] == 0.0) continue;
        outer_trips.emplace_back(pc.offset + i, pc.offset + j, pc.row[i] * pc.row[j]);
      }
    }
  }
  asm_.constraint_outer = SparseMat(cursor, cursor);
  asm_.constraint_outer.setFromTriplets(outer_trips.begin(), outer_trips.end());
  asm_.constraint_outer.makeCompressed();
  return asm_;
}

Vec linear_predictor(const DesignAssembly& asm_, const Vec& psi) {
  if (psi.size() != asm_.latent_dim) {
    throw DomainError("linear_predictor: psi has length " + std::to_string(psi.size()) +
                      ", latent dim is " + std::to_string(asm_.latent_dim));
  }
  return asm_.A * psi + asm_.offset;
}

}  // namespace gcstar
