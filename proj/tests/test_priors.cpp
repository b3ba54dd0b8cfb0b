#include <doctest.h>

#include <cmath>

#include "gcstar/errors.hpp"
#include "gcstar/priors.hpp"
#include "gcstar/quadrature.hpp"
#include "gcstar/special.hpp"

using namespace gcstar;

TEST_SUITE("hyperpriors") {

TEST_CASE("pc alpha distance is zero at the base model") {
  CHECK(pc_alpha_distance(1.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pc_alpha_distance(0.5) > 0.0);
  CHECK(pc_alpha_distance(3.0) > 0.0);
  CHECK_THROWS_AS(pc_alpha_distance(-0.1), DomainError);
}

TEST_CASE("pc alpha density integrates to one") {
  for (double lambda : {0.5, 1.0, 2.0}) {
    const PcAlphaPrior prior{lambda};
    auto density = [&](double a) {
      return a > 0.0 ? std::exp(pc_alpha_log_density(a, prior)) : 0.0;
    };
    // Split at the base model; the Jacobian has a kink there.
    const Tolerance tol{.rel_tol = 1e-9, .abs_tol = 1e-12, .max_iter = 4000};
    const double below = integrate(density, 1e-12, 1.0, tol).value;
    const double above =
        integrate_semi_infinite([&](double t) { return density(1.0 + t); }, tol).value;
    CHECK(below + above == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("pc alpha tail mass is exponential on the distance scale") {
  const PcAlphaPrior prior{1.3};
  const double d0 = 0.8;
  // alpha with d(alpha) = d0 on each branch: d decreases on (0,1) and
  // increases on (1, inf), so plain bisection works per branch.
  auto solve_below = [&] {
    double lo = 1e-6, hi = 1.0;
    for (int i = 0; i < 100; ++i) {
      const double mid = 0.5 * (lo + hi);
      (pc_alpha_distance(mid) > d0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  auto solve_above = [&] {
    double lo = 1.0, hi = 50.0;
    for (int i = 0; i < 100; ++i) {
      const double mid = 0.5 * (lo + hi);
      (pc_alpha_distance(mid) < d0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  const double a_below = solve_below();
  const double a_above = solve_above();
  auto density = [&](double a) { return std::exp(pc_alpha_log_density(a, prior)); };
  const Tolerance tol{.rel_tol = 1e-9, .abs_tol = 1e-12, .max_iter = 4000};
  const double mass_below = integrate(density, 1e-12, a_below, tol).value;
  const double mass_above =
      integrate_semi_infinite([&](double t) { return density(a_above + t); }, tol).value;
  CHECK(mass_below + mass_above == doctest::Approx(std::exp(-prior.lambda * d0)).epsilon(1e-4));
}

TEST_CASE("pc alpha density is continuous across alpha = 1") {
  const PcAlphaPrior prior{1.0};
  const double at_base = pc_alpha_log_density(1.0, prior);
  CHECK(at_base ==
        doctest::Approx(std::log(0.5 * prior.lambda * std::sqrt(trigamma(1.0)))).epsilon(1e-10));
  CHECK(pc_alpha_log_density(1.0 - 1e-7, prior) == doctest::Approx(at_base).epsilon(1e-6));
  CHECK(pc_alpha_log_density(1.0 + 1e-7, prior) == doctest::Approx(at_base).epsilon(1e-6));
}

TEST_CASE("pc precision prior") {
  const PcPrecisionPrior prior{1.0, 0.01};
  CHECK(prior.lambda() == doctest::Approx(-std::log(0.01)).epsilon(1e-15));
  CHECK(prior.lambda() == doctest::Approx(4.60517).epsilon(1e-5));
  // P(sigma > u_sigma) = a_tail by construction.
  CHECK(prior.sigma_tail_prob(1.0) == doctest::Approx(0.01).epsilon(1e-14));
  const Tolerance tol{.rel_tol = 1e-10, .abs_tol = 1e-14, .max_iter = 4000};
  const double mass = integrate_semi_infinite(
      [&](double tau) { return std::exp(pc_precision_log_density(tau, prior)); }, tol).value;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(pc_precision_log_density(0.0, prior), DomainError);
  CHECK_THROWS_AS(pc_precision_log_density(1.0, PcPrecisionPrior{1.0, 1.5}), DomainError);
}

TEST_CASE("pc precision tail identity at other thresholds") {
  const PcPrecisionPrior prior{2.0, 0.05};
  // P(sigma > u) = P(tau < u^-2) = integral of the density over (0, u^-2).
  const Tolerance tol{.rel_tol = 1e-10, .abs_tol = 1e-14, .max_iter = 4000};
  const double tail = integrate(
      [&](double tau) { return std::exp(pc_precision_log_density(tau, prior)); }, 1e-12,
      1.0 / (2.0 * 2.0), tol).value;
  CHECK(tail == doctest::Approx(0.05).epsilon(1e-6));
}

TEST_CASE("gaussian fixed-effect prior") {
  CHECK(gaussian_fixed_log_density(0.0) == doctest::Approx(-0.5 * std::log(200.0 * M_PI)));
  CHECK(gaussian_fixed_log_density(10.0) ==
        doctest::Approx(-0.5 * std::log(200.0 * M_PI) - 0.5));
  CHECK(gaussian_fixed_log_density(3.2) == gaussian_fixed_log_density(-3.2));
}

}  // TEST_SUITE
