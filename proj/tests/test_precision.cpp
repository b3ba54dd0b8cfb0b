#include <doctest.h>

#include <cmath>

#include "gcstar/errors.hpp"
#include "gcstar/precision.hpp"
#include "gcstar/rng.hpp"

using namespace gcstar;

namespace {

Vec random_vec(Rng& rng, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

}  // namespace

TEST_SUITE("igmrf precision builders") {

TEST_CASE("rw1: explicit 3x3 matrix and null space") {
  const PrecisionModel pm = rw1_precision(3);
  Mat expected(3, 3);
  expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  CHECK((Mat(pm.Q) - expected).cwiseAbs().maxCoeff() == 0.0);
  CHECK(pm.rank_deficiency == 1);
  pm.validate();
  CHECK_THROWS_AS(rw1_precision(1), DomainError);
}

TEST_CASE("rw1: quadratic form equals the first-difference sum") {
  Rng rng(3, 0);
  const PrecisionModel pm = rw1_precision(10);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec psi = random_vec(rng, 10);
    double direct = 0.0;
    for (int i = 0; i + 1 < 10; ++i) {
      direct += (psi[i + 1] - psi[i]) * (psi[i + 1] - psi[i]);
    }
    CHECK(psi.dot(pm.Q * psi) == doctest::Approx(direct).epsilon(1e-10));
  }
  CHECK((pm.Q * Vec::Ones(10)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rw2: interior stencil and null space") {
  const PrecisionModel pm = rw2_precision(5);
  const Mat q(pm.Q);
  const Vec interior = q.row(2);
  CHECK(interior[0] == doctest::Approx(1.0));
  CHECK(interior[1] == doctest::Approx(-4.0));
  CHECK(interior[2] == doctest::Approx(6.0));
  CHECK(interior[3] == doctest::Approx(-4.0));
  CHECK(interior[4] == doctest::Approx(1.0));
  CHECK(pm.rank_deficiency == 2);
  Vec linear(5);
  for (int i = 0; i < 5; ++i) linear[i] = i + 1.0;
  CHECK((pm.Q * Vec::Ones(5)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((pm.Q * linear).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(rw2_precision(2), DomainError);

  Rng rng(4, 0);
  const PrecisionModel pm9 = rw2_precision(9);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec psi = random_vec(rng, 9);
    double direct = 0.0;
    for (int i = 0; i + 2 < 9; ++i) {
      const double d2 = psi[i + 2] - 2.0 * psi[i + 1] + psi[i];
      direct += d2 * d2;
    }
    CHECK(psi.dot(pm9.Q * psi) == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("rw2d paper variant: kronecker formula reproduced densely") {
  const int n1 = 3, n2 = 3;
  const PrecisionModel pm = rw2d_precision(n1, n2, Rw2dVariant::Paper);

  auto dense_diff1 = [](int m) {
    Mat d = Mat::Zero(m - 1, m);
    for (int i = 0; i < m - 1; ++i) {
      d(i, i) = -1.0;
      d(i, i + 1) = 1.0;
    }
    return d;
  };
  auto dense_diff2 = [](int m) {
    Mat d = Mat::Zero(m - 2, m);
    for (int i = 0; i < m - 2; ++i) {
      d(i, i) = 1.0;
      d(i, i + 1) = -2.0;
      d(i, i + 2) = 1.0;
    }
    return d;
  };
  const Mat q1r = dense_diff1(n1).transpose() * dense_diff1(n1);
  const Mat q1c = dense_diff1(n2).transpose() * dense_diff1(n2);
  const Mat q2r = dense_diff2(n1).transpose() * dense_diff2(n1);
  const Mat q2c = dense_diff2(n2).transpose() * dense_diff2(n2);
  const Mat eye1 = Mat::Identity(n1, n1);
  const Mat eye2 = Mat::Identity(n2, n2);

  auto kron = [](const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i) {
      for (int j = 0; j < a.cols(); ++j) {
        out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
      }
    }
    return out;
  };
  const Mat expected = kron(eye1, q1c) + kron(q2r, eye2) + 2.0 * kron(q1r, q2c);
  CHECK((Mat(pm.Q) - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rw2d null spaces and positive semidefiniteness") {
  for (auto variant : {Rw2dVariant::Paper, Rw2dVariant::SquaredLaplacian}) {
    const PrecisionModel pm = rw2d_precision(4, 5, variant);
    CHECK(pm.dim == 20);
    CHECK((pm.Q * Vec::Ones(20)).cwiseAbs().maxCoeff() < 1e-12);
    pm.validate();
    CHECK(min_eigenvalue_dense(pm.Q) >= -1e-10);
    CHECK(pm.rank_deficiency == (variant == Rw2dVariant::Paper ? 2 : 3));

    Rng rng(5, 0);
    for (int trial = 0; trial < 200; ++trial) {
      const Vec psi = random_vec(rng, 20);
      CHECK(psi.dot(pm.Q * psi) >= -1e-10);
    }
  }
  CHECK_THROWS_AS(rw2d_precision(2, 5), DomainError);
}

TEST_CASE("builders produce exactly symmetric matrices") {
  for (const PrecisionModel& pm :
       {rw1_precision(17), rw2_precision(12), rw2d_precision(5, 7),
        rw2d_precision(4, 4, Rw2dVariant::SquaredLaplacian)}) {
    const SparseMat qt = SparseMat(pm.Q.transpose());
    const SparseMat diff = pm.Q - qt;
    CHECK(Mat(diff).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("null-space residuals stay tiny at larger dims") {
  const PrecisionModel big = rw2d_precision(40, 40);  // dim 1600
  for (const Vec& v : big.null_basis) {
    CHECK((big.Q * v).cwiseAbs().maxCoeff() / v.cwiseAbs().maxCoeff() < 1e-9);
  }
  const PrecisionModel rw = rw1_precision(10000);
  CHECK((rw.Q * Vec::Ones(10000)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("scale_to_unit_gv: invariants") {
  const PrecisionModel pm = scale_to_unit_gv(rw2_precision(8));
  CHECK(pm.rank_deficiency == 2);
  pm.validate();
  // Idempotent within rounding.
  const PrecisionModel twice = scale_to_unit_gv(pm);
  CHECK((Mat(twice.Q) - Mat(pm.Q)).cwiseAbs().maxCoeff() <
        1e-10 * Mat(pm.Q).cwiseAbs().maxCoeff());
}

TEST_CASE("scale_to_unit_gv: factor matches a dense pseudo-inverse oracle") {
  const PrecisionModel raw = rw1_precision(10);
  const PrecisionModel scaled = scale_to_unit_gv(raw);
  // Oracle: Moore-Penrose pseudo-inverse via dense SVD-style eigenpairs.
  Eigen::SelfAdjointEigenSolver<Mat> es((Mat(raw.Q)));
  Mat pinv = Mat::Zero(10, 10);
  for (int i = 0; i < 10; ++i) {
    if (es.eigenvalues()[i] > 1e-9) {
      pinv += es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose() /
              es.eigenvalues()[i];
    }
  }
  double log_sum = 0.0;
  for (int j = 0; j < 10; ++j) log_sum += std::log(pinv(j, j));
  const double geo = std::exp(log_sum / 10.0);
  const double factor = Mat(scaled.Q)(0, 0) / Mat(raw.Q)(0, 0);
  CHECK(factor == doctest::Approx(geo).epsilon(1e-9));
}

TEST_CASE("scale_to_unit_gv rejects undeclared singularity") {
  PrecisionModel pm = rw2_precision(8);
  pm.rank_deficiency = 1;           // lie about the rank
  pm.null_basis = {Vec::Ones(8)};
  CHECK_THROWS_AS(scale_to_unit_gv(pm), FactorizationError);
}

TEST_CASE("generalized log det matches the nonzero-eigenvalue product") {
  const PrecisionModel pm = rw1_precision(6);
  Eigen::SelfAdjointEigenSolver<Mat> es((Mat(pm.Q)));
  double expected = 0.0;
  for (int i = 0; i < 6; ++i) {
    if (es.eigenvalues()[i] > 1e-9) expected += std::log(es.eigenvalues()[i]);
  }
  CHECK(generalized_log_det(pm) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("iid block is a proper identity prior") {
  const PrecisionModel pm = iid_precision(7);
  CHECK(pm.rank_deficiency == 0);
  CHECK((Mat(pm.Q) - Mat::Identity(7, 7)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(generalized_log_det(pm) == doctest::Approx(0.0));
}

}  // TEST_SUITE
