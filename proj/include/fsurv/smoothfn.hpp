#pragma once

#include <string>
#include <vector>

#include "fsurv/types.hpp"

namespace fsurv {

// Natural cubic curve stored as values and second derivatives at its knots;
// each segment is the cubic determined by the endpoint states.  Covers both
// smoothing-spline fits and the small-sample polynomial fallback.
struct SmoothCurve {
  std::vector<double> knots;    // strictly increasing
  std::vector<double> values;   // f(knot)
  std::vector<double> second;   // f''(knot)
  double lambda = 0.0;
  Interval domain;

  double operator()(double t) const;
};

// Minimizer of sum (y_m - f(t_m))^2 + lambda * int (f'')^2 over cubic splines
// with knots at the data times.  Fewer than 4 points fall back to exact
// polynomial interpolation with a warning.
SmoothCurve fit_penalized(const std::vector<double>& times, const std::vector<double>& values,
                          double lambda, std::vector<std::string>* warnings = nullptr);

// Generalized cross-validation over a fixed 25-point log grid from 1e-6 to
// 1e4.  Ties resolve to the smaller lambda.
double select_lambda(const std::vector<double>& times, const std::vector<double>& values);

// Exact piecewise-cubic integral of the fitted curve over [t_a, t_b].
double integrate(const SmoothCurve& curve, double t_a, double t_b);

// Trapezoid rule over the raw points restricted to [t_a, t_b], interpolating
// linearly at interval endpoints that fall between sample times.
double trapezoid_aggregate(const std::vector<double>& times, const std::vector<double>& values,
                           double t_a, double t_b);

}  // namespace fsurv
