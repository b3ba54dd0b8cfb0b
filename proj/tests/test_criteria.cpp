#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gcstar/criteria.hpp"
#include "gcstar/errors.hpp"
#include "gcstar/rng.hpp"

using namespace gcstar;

TEST_SUITE("model criteria") {

TEST_CASE("dic: arithmetic from the definition") {
  // Deviance draws {10,12,14} <=> pll rows {-5,-6,-7}; deviance-at-mean 11.
  PointwiseLogLik pll;
  pll.values = (Mat(3, 1) << -5.0, -6.0, -7.0).finished();
  const DicResult r = dic(pll, -5.5);
  CHECK(r.mean_deviance == doctest::Approx(12.0));
  CHECK(r.p_d == doctest::Approx(1.0));
  CHECK(r.dic == doctest::Approx(13.0));
}

TEST_CASE("dic: zero-variance draws") {
  PointwiseLogLik pll;
  pll.values = (Mat(3, 2) << -1.0, -2.0, -1.0, -2.0, -1.0, -2.0).finished();
  const DicResult r = dic(pll, -2.5);
  CHECK(r.mean_deviance == doctest::Approx(6.0));
  CHECK(r.dic == doctest::Approx(2.0 * 6.0 - 5.0));
  CHECK_THROWS_AS(dic(pll, std::nan("")), DomainError);
}

TEST_CASE("waic: degenerate and hand-computed cases") {
  PointwiseLogLik same;
  same.values = (Mat(2, 3) << -1.0, -2.0, -0.5, -1.0, -2.0, -0.5).finished();
  const WaicResult r0 = waic(same);
  CHECK(r0.p_waic == doctest::Approx(0.0));
  CHECK(r0.waic == doctest::Approx(-2.0 * (-3.5)));

  // Two draws, one observation: pll = {log 0.2, log 0.4}.
  PointwiseLogLik two;
  two.values = (Mat(2, 1) << std::log(0.2), std::log(0.4)).finished();
  const WaicResult r = waic(two);
  const double lppd = std::log(0.3);
  const double mean = 0.5 * (std::log(0.2) + std::log(0.4));
  const double var = (std::pow(std::log(0.2) - mean, 2.0) + std::pow(std::log(0.4) - mean, 2.0));
  CHECK(r.lppd == doctest::Approx(lppd).epsilon(1e-12));
  CHECK(r.p_waic == doctest::Approx(var).epsilon(1e-12));
  CHECK(r.waic == doctest::Approx(-2.0 * (lppd - var)).epsilon(1e-12));
}

TEST_CASE("waic: brute-force recomputation on a random matrix") {
  Rng rng(61, 0);
  PointwiseLogLik pll;
  pll.values = Mat(100, 3);
  for (int s = 0; s < 100; ++s) {
    for (int i = 0; i < 3; ++i) pll.values(s, i) = -0.5 - std::fabs(rng.normal());
  }
  const WaicResult r = waic(pll);
  double lppd = 0.0, p = 0.0;
  for (int i = 0; i < 3; ++i) {
    double acc = 0.0;
    for (int s = 0; s < 100; ++s) acc += std::exp(pll.values(s, i));
    lppd += std::log(acc / 100.0);
    double mean = 0.0;
    for (int s = 0; s < 100; ++s) mean += pll.values(s, i);
    mean /= 100.0;
    double var = 0.0;
    for (int s = 0; s < 100; ++s) var += std::pow(pll.values(s, i) - mean, 2.0);
    p += var / 99.0;
  }
  CHECK(r.lppd == doctest::Approx(lppd).epsilon(1e-12));
  CHECK(r.p_waic == doctest::Approx(p).epsilon(1e-12));
}

TEST_CASE("cpo: constant column and two-draw hand example") {
  PointwiseLogLik pll;
  pll.values = Mat::Constant(4, 2, std::log(0.3));
  const CpoResult r = cpo_ls(pll);
  CHECK(r.cpo[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(r.cpo[1] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(r.ls == doctest::Approx(-2.0 * std::log(0.3)).epsilon(1e-12));

  PointwiseLogLik two;
  two.values = (Mat(2, 1) << std::log(0.2), std::log(0.4)).finished();
  const CpoResult r2 = cpo_ls(two);
  // harmonic mean of 0.2 and 0.4
  const double hm = 2.0 / (1.0 / 0.2 + 1.0 / 0.4);
  CHECK(r2.cpo[0] == doctest::Approx(hm).epsilon(1e-12));
  CHECK(r2.ls == doctest::Approx(-std::log(hm)).epsilon(1e-12));
}

TEST_CASE("criteria are invariant to draw and observation permutations") {
  Rng rng(67, 0);
  PointwiseLogLik pll;
  pll.values = Mat(40, 5);
  for (int s = 0; s < 40; ++s) {
    for (int i = 0; i < 5; ++i) pll.values(s, i) = -1.0 - std::fabs(rng.normal());
  }
  const WaicResult w0 = waic(pll);
  const CpoResult c0 = cpo_ls(pll);
  const DicResult d0 = dic(pll, -6.0);

  PointwiseLogLik shuffled = pll;
  std::vector<int> rows(40), cols(5);
  for (int i = 0; i < 40; ++i) rows[static_cast<size_t>(i)] = i;
  for (int i = 0; i < 5; ++i) cols[static_cast<size_t>(i)] = i;
  for (int i = 39; i > 0; --i) {
    std::swap(rows[static_cast<size_t>(i)],
              rows[static_cast<size_t>(rng.next_u64() % (i + 1))]);
  }
  for (int i = 4; i > 0; --i) {
    std::swap(cols[static_cast<size_t>(i)],
              cols[static_cast<size_t>(rng.next_u64() % (i + 1))]);
  }
  for (int s = 0; s < 40; ++s) {
    for (int i = 0; i < 5; ++i) {
      shuffled.values(s, i) = pll.values(rows[static_cast<size_t>(s)], cols[static_cast<size_t>(i)]);
    }
  }
  CHECK(waic(shuffled).waic == doctest::Approx(w0.waic).epsilon(1e-12));
  const CpoResult c1 = cpo_ls(shuffled);
  double ls_sorted0 = c0.ls, ls_sorted1 = c1.ls;
  CHECK(ls_sorted1 == doctest::Approx(ls_sorted0).epsilon(1e-12));
  std::vector<double> cpo0 = c0.cpo, cpo1 = c1.cpo;
  std::sort(cpo0.begin(), cpo0.end());
  std::sort(cpo1.begin(), cpo1.end());
  for (size_t i = 0; i < cpo0.size(); ++i) {
    CHECK(cpo1[i] == doctest::Approx(cpo0[i]).epsilon(1e-12));
  }
  CHECK(dic(shuffled, -6.0).dic == doctest::Approx(d0.dic).epsilon(1e-12));
}

TEST_CASE("jensen inequality: lppd >= mean pointwise loglik") {
  Rng rng(71, 0);
  PointwiseLogLik pll;
  pll.values = Mat(25, 8);
  for (int s = 0; s < 25; ++s) {
    for (int i = 0; i < 8; ++i) pll.values(s, i) = -2.0 + rng.normal();
  }
  const WaicResult r = waic(pll);
  CHECK(r.lppd >= pll.values.sum() / 25.0 - 1e-12);
}

TEST_CASE("mse_curve and se_alpha") {
  Mat f_hat(3, 4);
  f_hat << 1, 2, 3, 4, 1, 2, 3, 4, 1, 2, 3, 4;
  const Vec truth = (Vec(4) << 1, 2, 3, 4).finished();
  const MseResult exact = mse_curve(f_hat, truth);
  for (double v : exact.per_point) CHECK(v == doctest::Approx(0.0));

  const MseResult biased = mse_curve(f_hat.array() + 0.5, truth);
  for (double v : biased.per_point) CHECK(v == doctest::Approx(0.25));
  CHECK(biased.mean == doctest::Approx(0.25));

  Rng rng(73, 0);
  Mat random_hat(5, 3);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 3; ++c) random_hat(r, c) = rng.normal();
  }
  const Vec zero = Vec::Zero(3);
  const MseResult res = mse_curve(random_hat, zero);
  for (int c = 0; c < 3; ++c) {
    double acc = 0.0;
    for (int r = 0; r < 5; ++r) acc += random_hat(r, c) * random_hat(r, c);
    CHECK(res.per_point[static_cast<size_t>(c)] == doctest::Approx(acc / 5.0).epsilon(1e-12));
  }

  CHECK(se_alpha(1.5, 1.5) == 0.0);
  CHECK(se_alpha(0.9, 0.4) == doctest::Approx(0.25));
  CHECK_THROWS_AS(mse_curve(Mat(2, 3), Vec(4)), DomainError);
}

}  // TEST_SUITE
