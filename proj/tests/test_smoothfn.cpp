#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fsurv/rng.hpp"
#include "fsurv/smoothfn.hpp"
#include "fsurv/types.hpp"
#include "helpers.hpp"

using namespace fsurv;

namespace {

std::vector<double> eval_at(const SmoothCurve& f, const std::vector<double>& ts) {
  std::vector<double> out;
  for (double t : ts) out.push_back(f(t));
  return out;
}

}  // namespace

TEST_CASE("affine data lies in the penalty null space for every lambda") {
  const auto ts = testutil::linspace(0.0, 5.0, 20);
  std::vector<double> ys;
  for (double t : ts) ys.push_back(3.0 - 2.0 * t);
  for (double lambda : {0.0, 1e-3, 1.0, 1e6, 1e12}) {
    const SmoothCurve fit = fit_penalized(ts, ys, lambda);
    for (std::size_t k = 0; k < ts.size(); ++k)
      CHECK(std::abs(fit(ts[k]) - ys[k]) < 1e-9);
  }
}

TEST_CASE("huge lambda collapses to the least-squares line") {
  const auto ts = testutil::linspace(0.0, 2.0, 15);
  std::vector<double> ys;
  Rng rng(3);
  for (double t : ts) ys.push_back(1.0 + 0.5 * t + rng.normal(0.0, 0.3));
  // Ordinary least squares by hand.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k) {
    sx += ts[k];
    sy += ys[k];
    sxx += ts[k] * ts[k];
    sxy += ts[k] * ys[k];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icept = (sy - slope * sx) / n;
  const SmoothCurve fit = fit_penalized(ts, ys, 1e12);
  for (double t : ts) CHECK(std::abs(fit(t) - (icept + slope * t)) < 1e-6);
}

TEST_CASE("zero lambda interpolates") {
  const std::vector<double> ts = {0, 1, 2, 3, 4, 5};
  const std::vector<double> ys = {1, -1, 4, 0, 2, 2};
  const SmoothCurve fit = fit_penalized(ts, ys, 0.0);
  for (std::size_t k = 0; k < ts.size(); ++k) CHECK(std::abs(fit(ts[k]) - ys[k]) < 1e-9);
}

TEST_CASE("duplicate times are rejected and tiny samples fall back") {
  CHECK_THROWS_AS(fit_penalized({0, 1, 1, 2}, {0, 1, 2, 3}, 1.0), DataError);
  std::vector<std::string> warnings;
  const SmoothCurve fit = fit_penalized({0, 1, 2}, {1, 2, 5}, 7.0, &warnings);
  CHECK(warnings.size() == 1);
  // Exact quadratic interpolation through the three points.
  CHECK(std::abs(fit(0) - 1) < 1e-9);
  CHECK(std::abs(fit(1) - 2) < 1e-9);
  CHECK(std::abs(fit(2) - 5) < 1e-9);
}

TEST_CASE("fitted values are linear in the observations") {
  const auto ts = testutil::linspace(0.0, 3.0, 12);
  Rng rng(9);
  std::vector<double> y1, y2, ysum;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    y1.push_back(rng.normal());
    y2.push_back(rng.normal());
    ysum.push_back(y1.back() + y2.back());
  }
  const double lambda = 0.37;
  const auto f1 = eval_at(fit_penalized(ts, y1, lambda), ts);
  const auto f2 = eval_at(fit_penalized(ts, y2, lambda), ts);
  const auto fs = eval_at(fit_penalized(ts, ysum, lambda), ts);
  for (std::size_t k = 0; k < ts.size(); ++k) CHECK(std::abs(fs[k] - f1[k] - f2[k]) < 1e-9);
}

TEST_CASE("lambda selection is deterministic and resists pure noise") {
  const auto ts = testutil::linspace(0.0, 10.0, 40);
  // The selection grid is 25 log-spaced points on [1e-6, 1e4]; its median is 0.1.
  int at_least_median = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    std::vector<double> ys;
    for (std::size_t k = 0; k < ts.size(); ++k) ys.push_back(rng.normal());
    const double lambda = select_lambda(ts, ys);
    CHECK(lambda == select_lambda(ts, ys));
    if (lambda >= 0.1) ++at_least_median;
  }
  CHECK(at_least_median >= 8);
}

TEST_CASE("selected lambda reconstructs a clean sinusoid") {
  const auto ts = testutil::linspace(0.0, 6.283185307179586, 50);
  std::vector<double> ys;
  for (double t : ts) ys.push_back(std::sin(t));
  const SmoothCurve fit = fit_penalized(ts, ys, select_lambda(ts, ys));
  double sse = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double r = fit(ts[k]) - ys[k];
    sse += r * r;
  }
  CHECK(std::sqrt(sse / static_cast<double>(ts.size())) < 0.02);
}

TEST_CASE("integration of constants and lines is closed-form") {
  const auto ts = testutil::linspace(0.0, 2.0, 9);
  const SmoothCurve c = fit_penalized(ts, std::vector<double>(ts.size(), 3.5), 1.0);
  CHECK(integrate(c, 0.25, 1.75) == doctest::Approx(3.5 * 1.5).epsilon(1e-12));
  std::vector<double> line;
  for (double t : ts) line.push_back(t);
  const SmoothCurve l = fit_penalized(ts, line, 0.0);
  CHECK(integrate(l, 0.0, 2.0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("integration is additive over adjacent intervals") {
  const auto ts = testutil::linspace(0.0, 4.0, 17);
  Rng rng(21);
  std::vector<double> ys;
  for (std::size_t k = 0; k < ts.size(); ++k) ys.push_back(rng.normal());
  const SmoothCurve fit = fit_penalized(ts, ys, 0.05);
  const double whole = integrate(fit, 0.3, 3.7);
  const double parts = integrate(fit, 0.3, 1.9) + integrate(fit, 1.9, 3.7);
  CHECK(std::abs(whole - parts) < 1e-12);
}

TEST_CASE("integration is exact on interpolated cubics") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = rng.normal(), b = rng.normal(), c = rng.normal(), d = rng.normal();
    auto poly = [&](double t) { return a + b * t + c * t * t + d * t * t * t; };
    // A natural spline is not forced to reproduce the cubic at the ends, so
    // compare the spline's own segments against fine trapezoid quadrature.
    const auto ts = testutil::linspace(0.0, 2.0, 7);
    std::vector<double> ys;
    for (double t : ts) ys.push_back(poly(t));
    const SmoothCurve fit = fit_penalized(ts, ys, 0.0);
    const auto fine = testutil::linspace(0.1, 1.9, 20001);
    double quad = 0.0;
    for (std::size_t k = 0; k + 1 < fine.size(); ++k)
      quad += 0.5 * (fit(fine[k]) + fit(fine[k + 1])) * (fine[k + 1] - fine[k]);
    CHECK(integrate(fit, 0.1, 1.9) == doctest::Approx(quad).epsilon(1e-8));
  }
}

TEST_CASE("reversed or out-of-domain bounds are rejected") {
  const auto ts = testutil::linspace(0.0, 1.0, 8);
  const SmoothCurve fit = fit_penalized(ts, std::vector<double>(8, 1.0), 1.0);
  CHECK_THROWS_AS(integrate(fit, 0.8, 0.2), DataError);
  CHECK_THROWS_AS(integrate(fit, -0.5, 0.5), DataError);
  CHECK_THROWS_AS(trapezoid_aggregate(ts, std::vector<double>(8, 1.0), 0.5, 1.5), DataError);
}

TEST_CASE("trapezoid aggregate on raw points") {
  CHECK(trapezoid_aggregate({0, 2}, {0, 2}, 0, 2) == doctest::Approx(2.0).epsilon(1e-15));
  const auto ts = testutil::linspace(0.0, 3.0, 13);
  CHECK(trapezoid_aggregate(ts, std::vector<double>(13, 4.0), 0.5, 2.5) ==
        doctest::Approx(8.0).epsilon(1e-12));
  // Endpoints between sample times interpolate linearly: y = t on [0,3].
  std::vector<double> line;
  for (double t : ts) line.push_back(t);
  CHECK(trapezoid_aggregate(ts, line, 0.1, 2.9) ==
        doctest::Approx((2.9 * 2.9 - 0.1 * 0.1) / 2.0).epsilon(1e-12));
}

TEST_CASE("the two aggregators agree on dense smooth data") {
  const auto ts = testutil::linspace(0.0, 1.0, 200);
  std::vector<double> ys;
  for (double t : ts) ys.push_back(std::cos(3.0 * t));
  const SmoothCurve fit = fit_penalized(ts, ys, 0.0);
  CHECK(std::abs(integrate(fit, 0.05, 0.95) - trapezoid_aggregate(ts, ys, 0.05, 0.95)) < 1e-6);
}
