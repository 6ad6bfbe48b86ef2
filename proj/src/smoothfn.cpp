#include "fsurv/smoothfn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fsurv {

namespace {

// Symmetric positive definite pentadiagonal system, Cholesky-factored in band
// storage.  Sizes here are the number of interior knots, so O(m) is plenty.
class BandedSpd {
 public:
  explicit BandedSpd(std::size_t m) : m_(m), d0_(m, 0.0), d1_(m, 0.0), d2_(m, 0.0) {}

  double& at(std::size_t i, std::size_t j) {
    if (i == j) return d0_[i];
    if (i == j + 1) return d1_[j];
    return d2_[j];  // i == j + 2
  }

  void factor() {
    l0_ = d0_;
    l1_ = d1_;
    l2_ = d2_;
    for (std::size_t j = 0; j < m_; ++j) {
      double diag = l0_[j];
      if (j >= 1) diag -= l1_[j - 1] * l1_[j - 1];
      if (j >= 2) diag -= l2_[j - 2] * l2_[j - 2];
      if (!(diag > 0.0)) throw DataError("smoothing system is not positive definite");
      l0_[j] = std::sqrt(diag);
      if (j + 1 < m_) {
        double v = l1_[j];
        if (j >= 1) v -= l1_[j - 1] * l2_[j - 1];
        l1_[j] = v / l0_[j];
      }
      if (j + 2 < m_) l2_[j] /= l0_[j];
    }
  }

  std::vector<double> solve(std::vector<double> b) const {
    for (std::size_t i = 0; i < m_; ++i) {
      double v = b[i];
      if (i >= 1) v -= l1_[i - 1] * b[i - 1];
      if (i >= 2) v -= l2_[i - 2] * b[i - 2];
      b[i] = v / l0_[i];
    }
    for (std::size_t k = m_; k-- > 0;) {
      double v = b[k];
      if (k + 1 < m_) v -= l1_[k] * b[k + 1];
      if (k + 2 < m_) v -= l2_[k] * b[k + 2];
      b[k] = v / l0_[k];
    }
    return b;
  }

 private:
  std::size_t m_;
  std::vector<double> d0_, d1_, d2_;  // A bands
  std::vector<double> l0_, l1_, l2_;  // Cholesky bands
};

struct SplineProblem {
  std::vector<double> t, y, h;
  std::size_t n = 0;
};

SplineProblem sorted_problem(const std::vector<double>& times, const std::vector<double>& values) {
  if (times.size() != values.size()) throw DataError("smoothing input length mismatch");
  if (times.empty()) throw DataError("smoothing needs at least one point");
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  SplineProblem p;
  p.n = times.size();
  p.t.reserve(p.n);
  p.y.reserve(p.n);
  for (std::size_t k : order) {
    if (!std::isfinite(times[k]) || !std::isfinite(values[k]))
      throw DataError("smoothing input contains a non-finite entry");
    if (!p.t.empty() && times[k] == p.t.back()) throw DataError("duplicate time in smoothing input");
    p.t.push_back(times[k]);
    p.y.push_back(values[k]);
  }
  for (std::size_t i = 0; i + 1 < p.n; ++i) p.h.push_back(p.t[i + 1] - p.t[i]);
  return p;
}

// Q^T v for the natural-spline difference operator: second divided differences.
std::vector<double> apply_qt(const SplineProblem& p, const std::vector<double>& v) {
  const std::size_t m = p.n - 2;
  std::vector<double> out(m);
  for (std::size_t c = 0; c < m; ++c)
    out[c] = v[c] / p.h[c] - v[c + 1] * (1.0 / p.h[c] + 1.0 / p.h[c + 1]) + v[c + 2] / p.h[c + 1];
  return out;
}

std::vector<double> apply_q(const SplineProblem& p, const std::vector<double>& g) {
  const std::size_t m = p.n - 2;
  std::vector<double> out(p.n, 0.0);
  for (std::size_t c = 0; c < m; ++c) {
    out[c] += g[c] / p.h[c];
    out[c + 1] -= g[c] * (1.0 / p.h[c] + 1.0 / p.h[c + 1]);
    out[c + 2] += g[c] / p.h[c + 1];
  }
  return out;
}

// Bands of Q^T Q (pentadiagonal, size n-2).
void fill_qtq(const SplineProblem& p, double scale, BandedSpd& a) {
  const std::size_t m = p.n - 2;
  auto q_entry = [&](std::size_t row, std::size_t col) -> double {
    if (row == col) return 1.0 / p.h[col];
    if (row == col + 1) return -1.0 / p.h[col] - 1.0 / p.h[col + 1];
    if (row == col + 2) return 1.0 / p.h[col + 1];
    return 0.0;
  };
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = j; i < std::min(m, j + 3); ++i) {
      double sum = 0.0;
      for (std::size_t r = i; r <= std::min<std::size_t>(j + 2, p.n - 1); ++r)
        sum += q_entry(r, i) * q_entry(r, j);
      a.at(i, j) += scale * sum;
    }
}

void fill_r(const SplineProblem& p, BandedSpd& a) {
  const std::size_t m = p.n - 2;
  for (std::size_t c = 0; c < m; ++c) {
    a.at(c, c) += (p.h[c] + p.h[c + 1]) / 3.0;
    if (c + 1 < m) a.at(c + 1, c) += p.h[c + 1] / 6.0;
  }
}

SmoothCurve polynomial_fallback(const SplineProblem& p, double lambda,
                                std::vector<std::string>* warnings) {
  if (warnings)
    warnings->push_back("fewer than 4 points: exact polynomial interpolation used instead of a "
                        "smoothing spline");
  SmoothCurve c;
  c.knots = p.t;
  c.values = p.y;
  c.second.assign(p.n, 0.0);
  c.lambda = lambda;
  c.domain = {p.t.front(), p.t.back()};
  if (p.n == 3) {
    const double d01 = (p.y[1] - p.y[0]) / (p.t[1] - p.t[0]);
    const double d12 = (p.y[2] - p.y[1]) / (p.t[2] - p.t[1]);
    const double dd = (d12 - d01) / (p.t[2] - p.t[0]);
    c.second.assign(3, 2.0 * dd);
  }
  return c;
}

struct GcvParts {
  double rss = 0.0;
  double trace = 0.0;  // tr(A^-1 Q^T Q)
};

GcvParts gcv_parts(const SplineProblem& p, double lambda) {
  const std::size_t m = p.n - 2;
  BandedSpd a(m);
  fill_r(p, a);
  fill_qtq(p, lambda, a);
  a.factor();
  const std::vector<double> gamma = a.solve(apply_qt(p, p.y));
  const std::vector<double> qg = apply_q(p, gamma);
  GcvParts parts;
  for (std::size_t i = 0; i < p.n; ++i) {
    const double r = lambda * qg[i];
    parts.rss += r * r;
  }
  BandedSpd b(m);
  fill_qtq(p, 1.0, b);
  for (std::size_t c = 0; c < m; ++c) {
    std::vector<double> col(m, 0.0);
    for (std::size_t i = (c >= 2 ? c - 2 : 0); i < std::min(m, c + 3); ++i)
      col[i] = (i >= c ? b.at(i, c) : b.at(c, i));
    parts.trace += a.solve(std::move(col))[c];
  }
  return parts;
}

}  // namespace

double SmoothCurve::operator()(double t) const {
  const double eps = 1e-12 * std::max(1.0, std::abs(domain.hi - domain.lo));
  if (t < domain.lo - eps || t > domain.hi + eps)
    throw DataError("curve evaluated outside its domain");
  t = std::clamp(t, domain.lo, domain.hi);
  if (knots.size() == 1) return values[0];
  auto it = std::upper_bound(knots.begin(), knots.end(), t);
  std::size_t i = it == knots.begin() ? 0 : static_cast<std::size_t>(it - knots.begin()) - 1;
  if (i + 1 >= knots.size()) i = knots.size() - 2;
  const double h = knots[i + 1] - knots[i];
  const double u = t - knots[i];
  const double b = (values[i + 1] - values[i]) / h - h * (2.0 * second[i] + second[i + 1]) / 6.0;
  const double c = second[i] / 2.0;
  const double d = (second[i + 1] - second[i]) / (6.0 * h);
  return values[i] + u * (b + u * (c + u * d));
}

SmoothCurve fit_penalized(const std::vector<double>& times, const std::vector<double>& values,
                          double lambda, std::vector<std::string>* warnings) {
  if (!(lambda >= 0.0)) throw DataError("smoothing penalty must be nonnegative");
  const SplineProblem p = sorted_problem(times, values);
  if (p.n < 4) return polynomial_fallback(p, lambda, warnings);

  const std::size_t m = p.n - 2;
  BandedSpd a(m);
  fill_r(p, a);
  if (lambda > 0.0) fill_qtq(p, lambda, a);
  a.factor();
  const std::vector<double> gamma = a.solve(apply_qt(p, p.y));
  const std::vector<double> qg = apply_q(p, gamma);

  SmoothCurve c;
  c.knots = p.t;
  c.values.resize(p.n);
  for (std::size_t i = 0; i < p.n; ++i) c.values[i] = p.y[i] - lambda * qg[i];
  c.second.assign(p.n, 0.0);
  for (std::size_t i = 0; i < m; ++i) c.second[i + 1] = gamma[i];
  c.lambda = lambda;
  c.domain = {p.t.front(), p.t.back()};
  return c;
}

double select_lambda(const std::vector<double>& times, const std::vector<double>& values) {
  const SplineProblem p = sorted_problem(times, values);
  if (p.n < 6) throw DataError("lambda selection needs at least 6 points");
  double best_lambda = 0.0;
  double best_gcv = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 25; ++k) {
    const double lambda = std::pow(10.0, -6.0 + 10.0 * k / 24.0);
    const GcvParts parts = gcv_parts(p, lambda);
    const double df_removed = lambda * parts.trace;
    const double gcv = static_cast<double>(p.n) * parts.rss / (df_removed * df_removed);
    if (gcv < best_gcv) {
      best_gcv = gcv;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

double integrate(const SmoothCurve& curve, double t_a, double t_b) {
  const double eps = 1e-12 * std::max(1.0, std::abs(curve.domain.hi - curve.domain.lo));
  if (!(t_a < t_b)) throw DataError("integration bounds must satisfy t_a < t_b");
  if (t_a < curve.domain.lo - eps || t_b > curve.domain.hi + eps)
    throw DataError("integration bounds outside the curve domain");
  t_a = std::clamp(t_a, curve.domain.lo, curve.domain.hi);
  t_b = std::clamp(t_b, curve.domain.lo, curve.domain.hi);

  const auto& t = curve.knots;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double lo = std::max(t_a, t[i]);
    const double hi = std::min(t_b, t[i + 1]);
    if (lo >= hi) continue;
    const double h = t[i + 1] - t[i];
    const double b = (curve.values[i + 1] - curve.values[i]) / h -
                     h * (2.0 * curve.second[i] + curve.second[i + 1]) / 6.0;
    const double c = curve.second[i] / 2.0;
    const double d = (curve.second[i + 1] - curve.second[i]) / (6.0 * h);
    auto anti = [&](double u) {
      return u * (curve.values[i] + u * (b / 2.0 + u * (c / 3.0 + u * d / 4.0)));
    };
    total += anti(hi - t[i]) - anti(lo - t[i]);
  }
  return total;
}

double trapezoid_aggregate(const std::vector<double>& times, const std::vector<double>& values,
                           double t_a, double t_b) {
  const SplineProblem p = sorted_problem(times, values);
  if (!(t_a < t_b)) throw DataError("aggregation bounds must satisfy t_a < t_b");
  const double eps = 1e-12 * std::max(1.0, p.t.back() - p.t.front());
  if (t_a < p.t.front() - eps || t_b > p.t.back() + eps)
    throw DataError("aggregation bounds outside the sampled range");
  t_a = std::clamp(t_a, p.t.front(), p.t.back());
  t_b = std::clamp(t_b, p.t.front(), p.t.back());
  if (p.n == 1) return 0.0;

  auto interp = [&](double x) {
    auto it = std::upper_bound(p.t.begin(), p.t.end(), x);
    std::size_t i = it == p.t.begin() ? 0 : static_cast<std::size_t>(it - p.t.begin()) - 1;
    if (i + 1 >= p.n) i = p.n - 2;
    const double w = (x - p.t[i]) / (p.t[i + 1] - p.t[i]);
    return p.y[i] + w * (p.y[i + 1] - p.y[i]);
  };

  std::vector<double> xs{t_a};
  for (double x : p.t)
    if (x > t_a && x < t_b) xs.push_back(x);
  xs.push_back(t_b);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    total += 0.5 * (interp(xs[i]) + interp(xs[i + 1])) * (xs[i + 1] - xs[i]);
  return total;
}

}  // namespace fsurv
