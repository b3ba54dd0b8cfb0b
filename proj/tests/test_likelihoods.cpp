#include <doctest.h>

#include <cmath>

#include "gcstar/errors.hpp"
#include "gcstar/likelihoods.hpp"
#include "gcstar/rng.hpp"
#include "oracles.hpp"

using namespace gcstar;

namespace {

// Finite-difference checks shared by all observation models.
void check_derivatives(LikelihoodKind kind, double y, double eta, double hyper,
                       double d1_rel = 1e-6, double d2_rel = 1e-4) {
  auto ll = [&](double e) { return loglik_eta(kind, y, e, hyper).loglik; };
  const LoglikEval ev = loglik_eta(kind, y, eta, hyper);
  const double fd_d1 = oracles::fd1(ll, eta, 1e-6);
  CHECK(ev.d1 == doctest::Approx(fd_d1).epsilon(d1_rel).scale(1.0));
  if (!ev.d2_clamped) {
    const double fd_d2 = oracles::fd2(ll, eta, 2e-4);
    CHECK(ev.d2 == doctest::Approx(fd_d2).epsilon(d2_rel).scale(1.0));
  }
}

}  // namespace

TEST_SUITE("count likelihoods") {

TEST_CASE("gc reduces to poisson at alpha = 1") {
  // (y=3, eta=log 2): poisson loglik, d1 = y - e^eta = 1, d2 = -2.
  const LoglikEval gc = gc_loglik_eta(3.0, std::log(2.0), 1.0);
  const LoglikEval pois = poisson_loglik_eta(3.0, std::log(2.0));
  CHECK(gc.loglik == doctest::Approx(pois.loglik).epsilon(1e-12));
  CHECK(pois.d1 == doctest::Approx(1.0));
  CHECK(pois.d2 == doctest::Approx(-2.0));
  CHECK(gc.d1 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(gc.d2 == doctest::Approx(-2.0).epsilon(1e-6));

  for (double y = 0.0; y <= 30.0; ++y) {
    for (double eta : {-0.5, 0.0, 1.4}) {
      CHECK(std::fabs(gc_loglik_eta(y, eta, 1.0).loglik -
                      poisson_loglik_eta(y, eta).loglik) < 1e-12);
    }
  }
}

TEST_CASE("gc derivatives match finite differences") {
  check_derivatives(LikelihoodKind::GC, 2.0, 0.3, 0.4);
  check_derivatives(LikelihoodKind::GC, 7.0, 1.1, 1.5);
  Rng rng(8, 0);
  for (int i = 0; i < 100; ++i) {
    const double y = std::floor(rng.uniform(0.0, 12.0));
    const double eta = rng.uniform(-1.5, 2.0);
    const double alpha = std::exp(rng.uniform(-1.0, 0.7));
    check_derivatives(LikelihoodKind::GC, y, eta, alpha);
  }
}

TEST_CASE("poisson derivatives and examples") {
  const LoglikEval at0 = poisson_loglik_eta(0.0, 0.0);
  CHECK(at0.loglik == doctest::Approx(-1.0));
  CHECK(at0.d1 == doctest::Approx(-1.0));
  CHECK(at0.d2 == doctest::Approx(-1.0));
  CHECK(poisson_loglik_eta(4.0, std::log(4.0)).d1 == doctest::Approx(0.0));
  Rng rng(9, 0);
  for (int i = 0; i < 100; ++i) {
    check_derivatives(LikelihoodKind::Poisson, std::floor(rng.uniform(0.0, 15.0)),
                      rng.uniform(-2.0, 2.5), 0.0);
  }
}

TEST_CASE("negbin: poisson limit, normalization, derivatives") {
  for (double y : {0.0, 3.0, 9.0}) {
    CHECK(std::fabs(negbin_loglik_eta(y, 0.7, 1e8).loglik -
                    poisson_loglik_eta(y, 0.7).loglik) < 1e-6);
  }
  double total = 0.0;
  for (double y = 0.0; y < 400.0; ++y) total += std::exp(negbin_loglik_eta(y, 0.0, 2.0).loglik);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  Rng rng(10, 0);
  for (int i = 0; i < 100; ++i) {
    check_derivatives(LikelihoodKind::NegBin, std::floor(rng.uniform(0.0, 15.0)),
                      rng.uniform(-1.5, 2.0), std::exp(rng.uniform(-1.0, 3.0)));
  }
  CHECK_THROWS_AS(negbin_loglik_eta(1.0, 0.0, 0.0), DomainError);
}

TEST_CASE("genpoisson: poisson limit, normalization, derivatives") {
  for (double y : {0.0, 2.0, 6.0}) {
    CHECK(std::fabs(genpoisson_loglik_eta(y, 0.4, 1e-8).loglik -
                    poisson_loglik_eta(y, 0.4).loglik) < 1e-6);
  }
  double total = 0.0;
  for (double y = 0.0; y < 500.0; ++y) {
    total += std::exp(genpoisson_loglik_eta(y, 0.5, 0.2).loglik);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  // Mean parameterization: E[Y] = e^eta.
  double mean = 0.0;
  for (double y = 0.0; y < 500.0; ++y) {
    mean += y * std::exp(genpoisson_loglik_eta(y, 0.5, 0.2).loglik);
  }
  CHECK(mean == doctest::Approx(std::exp(0.5)).epsilon(1e-6));
  Rng rng(11, 0);
  for (int i = 0; i < 100; ++i) {
    check_derivatives(LikelihoodKind::GenPoisson, std::floor(rng.uniform(0.0, 12.0)),
                      rng.uniform(-1.0, 1.5), rng.uniform(0.01, 0.6));
  }
  CHECK_THROWS_AS(genpoisson_loglik_eta(1.0, 0.0, 1.0), DomainError);
}

TEST_CASE("gaussian likelihood") {
  const LoglikEval e = gaussian_loglik_eta(1.3, 0.3);
  CHECK(e.d1 == doctest::Approx(1.0));
  CHECK(e.d2 == doctest::Approx(-1.0));
  CHECK(e.loglik == doctest::Approx(-0.5 - 0.5 * std::log(2.0 * M_PI)));
}

TEST_CASE("poisson-limit settings coincide across models") {
  for (double y : {0.0, 1.0, 5.0}) {
    for (double eta : {-0.3, 0.9}) {
      const double pois = poisson_loglik_eta(y, eta).loglik;
      CHECK(std::fabs(gc_loglik_eta(y, eta, 1.0).loglik - pois) < 1e-6);
      CHECK(std::fabs(negbin_loglik_eta(y, eta, 1e8).loglik - pois) < 1e-6);
      CHECK(std::fabs(genpoisson_loglik_eta(y, eta, 1e-8).loglik - pois) < 1e-6);
    }
  }
}

TEST_CASE("curvature ceiling holds everywhere") {
  // Extreme y against a small mean can flip the GC curvature sign; the
  // clamp keeps Newton on a damped-ascent path.
  for (double y : {0.0, 3.0, 40.0, 60.0}) {
    for (double eta : {-2.0, 0.0, 2.0}) {
      for (double alpha : {0.2, 1.0, 2.5}) {
        CHECK(gc_loglik_eta(y, eta, alpha).d2 <= -1e-10);
      }
    }
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(gc_loglik_eta(-1.0, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(gc_loglik_eta(1.5, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(gc_loglik_eta(1.0, 0.0, -1.0), DomainError);
  CHECK_THROWS_AS(poisson_loglik_eta(-2.0, 0.0), DomainError);
}

}  // TEST_SUITE
