#pragma once

#include <functional>

#include "gcstar/special.hpp"

namespace gcstar {

struct QuadResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int subdivisions = 0;
};

// Adaptive Gauss-Kronrod (G7/K15) on a finite interval.  Splits the worst
// panel until the summed error estimate is below max(abs_tol, rel_tol*|I|).
QuadResult integrate(const std::function<double(double)>& f, double lo, double hi,
                     const Tolerance& tol = {.rel_tol = 1e-10, .abs_tol = 1e-12,
                                             .max_iter = 2000});

// Integral of f over (0, inf) via the map t = u/(1-u) onto (0,1).
QuadResult integrate_semi_infinite(const std::function<double(double)>& f,
                                   const Tolerance& tol = {.rel_tol = 1e-10,
                                                           .abs_tol = 1e-12,
                                                           .max_iter = 2000});

}  // namespace gcstar
