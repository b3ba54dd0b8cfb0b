#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gcstar/config.hpp"
#include "gcstar/dataset.hpp"
#include "gcstar/likelihoods.hpp"
#include "gcstar/mesh.hpp"
#include "gcstar/precision.hpp"

namespace gcstar {

enum class RwOrder { Rw1, Rw2 };

struct SmoothTerm {
  std::string covariate;
  RwOrder prior_kind = RwOrder::Rw2;
  int n_bins = 25;
};

struct SpatialTerm {
  enum class Kind { Rw2d, Tps };
  Kind kind = Kind::Tps;
  int n1 = 0, n2 = 0;                       // rw2d lattice shape
  Rw2dVariant variant = Rw2dVariant::Paper;  // rw2d stencil choice
  double max_edge = 0.0;                    // tps; 0 = auto (bbox diag / 20)
  double hull_extension = -1.0;             // tps; <0 = auto (20% bbox diag)
};

// Declarative model formula, parseable from the [model] config section.
struct ModelSpec {
  LikelihoodKind likelihood = LikelihoodKind::GC;
  bool intercept = true;
  std::vector<std::string> linear_terms;
  std::vector<SmoothTerm> smooth_terms;
  std::optional<SpatialTerm> spatial;
  bool iid_term = false;

  void validate() const;
  static ModelSpec from_config(const Config& cfg);
  void to_config(Config& cfg) const;
};

// Equal-width binning of a covariate; boundary values fall to the left
// bin so the maximum stays inside the last bin.
struct BinnedCovariate {
  std::vector<int> group;       // 0-based bin per row
  std::vector<double> midpoint; // strictly increasing, one per bin
};
BinnedCovariate bin_covariate(const std::vector<double>& values, int n_bins);

enum class BlockType { Fixed, Smooth, Spatial, Iid };

struct LatentBlock {
  std::string name;
  BlockType type = BlockType::Fixed;
  int offset = 0;
  int size = 0;
  bool penalized = false;        // carries its own tau hyperparameter
  PrecisionModel prior;          // unit-scale; empty for fixed blocks
  double gen_logdet = 0.0;       // log|Q|_+ of the unit-scale prior
  std::vector<double> bin_midpoints;  // smooth blocks
};

// Compiled latent layout: eta = A psi + offset.
struct DesignAssembly {
  LikelihoodKind likelihood = LikelihoodKind::GC;
  int latent_dim = 0;
  std::vector<LatentBlock> blocks;

  SparseMat A;          // all rows
  Vec offset;           // all rows
  std::vector<int> observed_rows;
  std::vector<int> prediction_rows;
  SparseMat A_obs;      // likelihood rows only
  Vec offset_obs;
  Vec y_obs;

  Mat constraints;      // stacked identifiability rows over the full latent
  // Ac'Ac as a sparse matrix; added (scaled) to the Newton Hessian so the
  // trade directions the constraints remove never make it singular.  On
  // the constraint subspace the augmentation vanishes, so conditioned
  // results are unchanged.
  SparseMat constraint_outer;
  double fixed_prior_variance = 100.0;

  TriMesh mesh;         // populated when spatial = tps
  bool has_mesh = false;

  int n_penalized_blocks() const;
  const LatentBlock* find_block(const std::string& name) const;
};

struct DesignOptions {
  double fixed_prior_variance = 100.0;
};

DesignAssembly build_design(const ModelSpec& spec, const Dataset& data,
                            const DesignOptions& opts = {});

Vec linear_predictor(const DesignAssembly& asm_, const Vec& psi);

}  // namespace gcstar
