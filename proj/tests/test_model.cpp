#include <doctest.h>

#include <cmath>

#include "gcstar/config.hpp"
#include "gcstar/errors.hpp"
#include "gcstar/model.hpp"
#include "gcstar/rng.hpp"

using namespace gcstar;

namespace {

Dataset toy_dataset(int n, bool coords = false) {
  Dataset d;
  Rng rng(51, 0);
  for (int i = 0; i < n; ++i) {
    d.y.push_back(std::floor(rng.uniform(0.0, 6.0)));
    d.y_missing.push_back(false);
    d.covariates["x"].push_back(rng.uniform(-2.0, 2.0));
    d.covariates["w"].push_back(rng.uniform(0.0, 1.0));
    if (coords) {
      d.s1.push_back(rng.uniform());
      d.s2.push_back(rng.uniform());
    }
  }
  d.has_coords = coords;
  return d;
}

}  // namespace

TEST_SUITE("model specification") {

TEST_CASE("bin_covariate: arithmetic example") {
  const BinnedCovariate b = bin_covariate({-1.0, -0.5, 0.0, 1.0}, 4);
  CHECK(b.group == std::vector<int>{0, 0, 1, 3});
  REQUIRE(b.midpoint.size() == 4);
  CHECK(b.midpoint[0] == doctest::Approx(-0.75));
  CHECK(b.midpoint[1] == doctest::Approx(-0.25));
  CHECK(b.midpoint[2] == doctest::Approx(0.25));
  CHECK(b.midpoint[3] == doctest::Approx(0.75));
}

TEST_CASE("bin_covariate: monotone values give nondecreasing groups") {
  std::vector<double> values;
  for (int i = 0; i < 57; ++i) values.push_back(std::pow(static_cast<double>(i), 1.3));
  const BinnedCovariate b = bin_covariate(values, 12);
  for (size_t i = 1; i < values.size(); ++i) CHECK(b.group[i] >= b.group[i - 1]);
  // Midpoint reconstruction error bounded by half a bin width.
  const double width = b.midpoint[1] - b.midpoint[0];
  for (size_t i = 0; i < values.size(); ++i) {
    CHECK(std::fabs(values[i] - b.midpoint[static_cast<size_t>(b.group[i])]) <=
          0.5 * width * (1.0 + 1e-12));
  }
}

TEST_CASE("bin_covariate: errors") {
  CHECK_THROWS_AS(bin_covariate({1.0, 1.0, 1.0}, 5), DomainError);
  CHECK_THROWS_AS(bin_covariate({0.0, 1.0, 2.0}, 2), DomainError);
  CHECK_THROWS_AS(bin_covariate({0.0, 1.0}, 5), DomainError);  // 2 distinct values
}

TEST_CASE("intercept-only design") {
  ModelSpec spec;
  spec.likelihood = LikelihoodKind::Poisson;
  const Dataset data = toy_dataset(5);
  const DesignAssembly asm_ = build_design(spec, data);
  CHECK(asm_.latent_dim == 1);
  CHECK(Mat(asm_.A).col(0).sum() == doctest::Approx(5.0));
  CHECK(asm_.constraints.rows() == 0);
}

TEST_CASE("intercept + linear + rw1 smooth layout") {
  ModelSpec spec;
  spec.likelihood = LikelihoodKind::Poisson;
  spec.linear_terms = {"x"};
  spec.smooth_terms.push_back({"w", RwOrder::Rw1, 4});
  const Dataset data = toy_dataset(10);
  const DesignAssembly asm_ = build_design(spec, data);
  CHECK(asm_.latent_dim == 6);
  CHECK(asm_.blocks.size() == 3);
  CHECK(asm_.blocks[0].name == "intercept");
  CHECK(asm_.blocks[1].name == "linear_x");
  CHECK(asm_.blocks[2].name == "smooth_w");
  CHECK(asm_.blocks[2].penalized);
  // Row pattern: (1, x_i, e_bin(i)).
  const Mat a(asm_.A);
  const BinnedCovariate bins = bin_covariate(data.covariates.at("w"), 4);
  for (int i = 0; i < 10; ++i) {
    CHECK(a(i, 0) == 1.0);
    CHECK(a(i, 1) == data.covariates.at("x")[static_cast<size_t>(i)]);
    CHECK(a(i, 2 + bins.group[static_cast<size_t>(i)]) == 1.0);
    CHECK(a.row(i).sum() ==
          doctest::Approx(1.0 + data.covariates.at("x")[static_cast<size_t>(i)] + 1.0));
  }
  // One sum-to-zero constraint over the smooth block.
  REQUIRE(asm_.constraints.rows() == 1);
  CHECK(asm_.constraints.row(0).segment(2, 4).sum() == doctest::Approx(4.0));
  CHECK(asm_.constraints.row(0).head(2).cwiseAbs().sum() == 0.0);
}

TEST_CASE("linear predictor equals hand computation on a 3-row toy") {
  ModelSpec spec;
  spec.likelihood = LikelihoodKind::Poisson;
  spec.linear_terms = {"x"};
  Dataset data;
  data.y = {1, 2, 3};
  data.y_missing = {false, false, false};
  data.covariates["x"] = {0.5, -1.0, 2.0};
  data.offset_log = {0.1, 0.2, 0.3};
  const DesignAssembly asm_ = build_design(spec, data);
  const Vec psi = (Vec(2) << 0.7, -0.4).finished();
  const Vec eta = linear_predictor(asm_, psi);
  CHECK(eta[0] == doctest::Approx(0.7 - 0.4 * 0.5 + 0.1));
  CHECK(eta[1] == doctest::Approx(0.7 + 0.4 + 0.2));
  CHECK(eta[2] == doctest::Approx(0.7 - 0.8 + 0.3));
  // psi = 0 -> eta = offset; linear in psi.
  CHECK((linear_predictor(asm_, Vec::Zero(2)) -
         (Vec(3) << 0.1, 0.2, 0.3).finished()).cwiseAbs().maxCoeff() == 0.0);
  const Vec psi2 = 2.0 * psi;
  const Vec lhs = linear_predictor(asm_, psi2) - linear_predictor(asm_, Vec::Zero(2));
  const Vec rhs = 2.0 * (linear_predictor(asm_, psi) - linear_predictor(asm_, Vec::Zero(2)));
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(linear_predictor(asm_, Vec::Zero(5)), DomainError);
}

TEST_CASE("dense product oracle on a random design") {
  ModelSpec spec;
  spec.likelihood = LikelihoodKind::Poisson;
  spec.linear_terms = {"x", "w"};
  spec.smooth_terms.push_back({"z", RwOrder::Rw2, 6});
  Dataset data = toy_dataset(20);
  Rng rng(53, 0);
  for (int i = 0; i < 20; ++i) data.covariates["z"].push_back(rng.uniform(-3.0, 3.0));
  const DesignAssembly asm_ = build_design(spec, data);
  const Mat dense(asm_.A);
  for (int trial = 0; trial < 20; ++trial) {
    Vec psi(asm_.latent_dim);
    for (int j = 0; j < asm_.latent_dim; ++j) psi[j] = rng.normal();
    const Vec via_dense = dense * psi + asm_.offset;
    CHECK((linear_predictor(asm_, psi) - via_dense).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("rw2 smooth with matching linear term pins the linear null direction") {
  ModelSpec spec;
  spec.likelihood = LikelihoodKind::Poisson;
  spec.smooth_terms.push_back({"x", RwOrder::Rw2, 5});
  const Dataset data = toy_dataset(25);
  const DesignAssembly plain = build_design(spec, data);
  CHECK(plain.constraints.rows() == 1);

  // Same covariate also as an explicit linear effect is rejected by the
  // duplication rule, so the extra constraint only appears through a
  // distinct-but-linked workflow; emulate by direct spec surgery.
  ModelSpec both = spec;
  both.linear_terms = {"x"};
  CHECK_THROWS_AS(build_design(both, data), DomainError);
}

TEST_CASE("missing responses split into prediction rows") {
  ModelSpec spec;
  spec.likelihood = LikelihoodKind::Poisson;
  Dataset data = toy_dataset(6);
  data.y_missing[2] = true;
  data.y_missing[5] = true;
  const DesignAssembly asm_ = build_design(spec, data);
  CHECK(asm_.observed_rows == std::vector<int>{0, 1, 3, 4});
  CHECK(asm_.prediction_rows == std::vector<int>{2, 5});
  CHECK(asm_.A_obs.rows() == 4);
  CHECK(asm_.y_obs.size() == 4);
  CHECK(asm_.A.rows() == 6);
}

TEST_CASE("rw2d spatial block maps lattice coordinates") {
  ModelSpec spec;
  spec.likelihood = LikelihoodKind::Poisson;
  SpatialTerm spatial;
  spatial.kind = SpatialTerm::Kind::Rw2d;
  spatial.n1 = 3;
  spatial.n2 = 4;
  spec.spatial = spatial;
  spec.intercept = true;

  Dataset data;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) {
      data.y.push_back(1.0);
      data.y_missing.push_back(false);
      data.s1.push_back(i / 2.0);
      data.s2.push_back(j / 3.0);
    }
  }
  data.has_coords = true;
  const DesignAssembly asm_ = build_design(spec, data);
  CHECK(asm_.latent_dim == 1 + 12);
  const Mat a(asm_.A);
  for (int i = 0; i < 12; ++i) {
    CHECK(a(i, 1 + i) == 1.0);  // row-major cell indicators in order
  }
  // Lattice mismatch errors.
  Dataset bad = data;
  bad.s1[0] = 0.123;
  CHECK_THROWS_AS(build_design(spec, bad), DomainError);
}

TEST_CASE("config round trip normalizes to a fixed point") {
  const std::string text =
      "[model]\n"
      "likelihood = gc\n"
      "intercept = true\n"
      "linear = x1,x2\n"
      "smooth = z:rw2:25, w:rw1:10\n"
      "spatial = rw2d:5x6\n"
      "iid = true\n";
  const Config cfg = Config::parse(text);
  const ModelSpec spec = ModelSpec::from_config(cfg);
  Config emitted;
  spec.to_config(emitted);
  const ModelSpec again = ModelSpec::from_config(emitted);
  Config emitted2;
  again.to_config(emitted2);
  CHECK(emitted.emit() == emitted2.emit());
  CHECK(spec.linear_terms == again.linear_terms);
  CHECK(spec.smooth_terms.size() == again.smooth_terms.size());
  CHECK(again.spatial->n2 == 6);
  CHECK(again.iid_term);
}

TEST_CASE("constraint rows annihilate the declared improper directions") {
  ModelSpec spec;
  spec.likelihood = LikelihoodKind::Poisson;
  spec.smooth_terms.push_back({"x", RwOrder::Rw1, 6});
  spec.iid_term = true;
  const Dataset data = toy_dataset(15);
  const DesignAssembly asm_ = build_design(spec, data);
  // smooth sum-to-zero only; iid unconstrained.
  REQUIRE(asm_.constraints.rows() == 1);
  const LatentBlock* smooth = asm_.find_block("smooth_x");
  REQUIRE(smooth != nullptr);
  // The constraint row restricted to the block equals its null direction.
  const Vec row = asm_.constraints.row(0).transpose();
  const Vec in_block = row.segment(smooth->offset, smooth->size);
  CHECK((in_block - Vec::Ones(smooth->size)).cwiseAbs().maxCoeff() == 0.0);
}

}  // TEST_SUITE
