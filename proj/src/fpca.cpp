#include "fsurv/fpca.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "fsurv/detail/numfmt.hpp"
#include "fsurv/detail/parallel.hpp"

namespace fsurv {

namespace {

constexpr double kWideBandFactor = 10.0;  // at this multiple of the window, weights go uniform

double epanechnikov(double u) {
  const double a = std::abs(u);
  return a < 1.0 ? 0.75 * (1.0 - a * a) : 0.0;
}

std::vector<double> make_grid(Interval window, std::size_t grid_size) {
  if (grid_size < 2) throw DataError("grid needs at least 2 points");
  std::vector<double> grid(grid_size);
  const double step = window.length() / static_cast<double>(grid_size - 1);
  for (std::size_t g = 0; g < grid_size; ++g)
    grid[g] = window.lo + step * static_cast<double>(g);
  grid.back() = window.hi;
  return grid;
}

// Weighted local linear fit at x0 over (xs, ys); returns the intercept.
// Uniform weights solve the plain least-squares line.
double local_linear_at(const std::vector<double>& xs, const std::vector<double>& ys, double x0,
                       double bandwidth, bool uniform, double span, bool* widened) {
  double h = bandwidth;
  for (int attempt = 0; attempt < 64; ++attempt) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;
    double first_x = 0.0;
    bool has_first = false, two_distinct = false;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const double u = xs[k] - x0;
      const double w = uniform ? 1.0 : epanechnikov(u / h);
      if (w <= 0.0) continue;
      if (!has_first) {
        first_x = xs[k];
        has_first = true;
      } else if (xs[k] != first_x) {
        two_distinct = true;
      }
      s0 += w;
      s1 += w * u;
      s2 += w * u * u;
      t0 += w * ys[k];
      t1 += w * u * ys[k];
    }
    if (two_distinct) {
      const double det = s0 * s2 - s1 * s1;
      if (det > 1e-14 * std::max(1.0, s0 * s2)) return (s2 * t0 - s1 * t1) / det;
    } else if (has_first && uniform) {
      return t0 / s0;  // degenerate design: all observation times equal
    }
    if (uniform) break;
    h *= 2.0;
    if (widened) *widened = true;
    if (h > kWideBandFactor * span) uniform = true;
  }
  throw DataError("local linear smoother could not find usable kernel mass");
}

struct RawPair {
  double s, t, v;
};

// 2-D local linear fit at (s0, t0); pairs must be sorted by s.  Falls back to
// widening when the window holds too few points for a stable plane fit.
double local_plane_at(const std::vector<RawPair>& pairs, double s0, double t0, double bandwidth,
                      double span, bool* widened) {
  double h = bandwidth;
  for (int attempt = 0; attempt < 64; ++attempt) {
    const bool uniform = h > kWideBandFactor * span;
    auto lo = pairs.begin(), hi = pairs.end();
    if (!uniform) {
      lo = std::lower_bound(pairs.begin(), pairs.end(), s0 - h,
                            [](const RawPair& p, double x) { return p.s < x; });
      hi = std::upper_bound(pairs.begin(), pairs.end(), s0 + h,
                            [](double x, const RawPair& p) { return x < p.s; });
    }
    double a00 = 0, a01 = 0, a02 = 0, a11 = 0, a12 = 0, a22 = 0;
    double b0 = 0, b1 = 0, b2 = 0;
    std::size_t used = 0;
    for (auto it = lo; it != hi; ++it) {
      const double us = it->s - s0;
      const double ut = it->t - t0;
      const double w = uniform ? 1.0 : epanechnikov(us / h) * epanechnikov(ut / h);
      if (w <= 0.0) continue;
      ++used;
      a00 += w;
      a01 += w * us;
      a02 += w * ut;
      a11 += w * us * us;
      a12 += w * us * ut;
      a22 += w * ut * ut;
      b0 += w * it->v;
      b1 += w * us * it->v;
      b2 += w * ut * it->v;
    }
    if (used >= 3) {
      Eigen::Matrix3d a;
      a << a00, a01, a02, a01, a11, a12, a02, a12, a22;
      Eigen::Vector3d b(b0, b1, b2);
      Eigen::Matrix3d inv;
      bool invertible = false;
      double det = 0.0;
      a.computeInverseAndDetWithCheck(inv, det, invertible, 1e-12 * std::max(1.0, a00 * a11 * a22));
      if (invertible) return (inv * b)(0);
    }
    if (uniform && used > 0) {
      return b0 / a00;  // fully degenerate design: weighted mean
    }
    h *= 2.0;
    if (widened) *widened = true;
  }
  throw DataError("covariance smoother could not find usable kernel mass");
}

std::vector<double> trapezoid_weights(const std::vector<double>& grid) {
  const std::size_t g = grid.size();
  std::vector<double> w(g, 0.0);
  for (std::size_t k = 0; k + 1 < g; ++k) {
    const double half = 0.5 * (grid[k + 1] - grid[k]);
    w[k] += half;
    w[k + 1] += half;
  }
  return w;
}

}  // namespace

double interp_grid(const std::vector<double>& grid, const std::vector<double>& values, double t) {
  if (t <= grid.front()) return values.front();
  if (t >= grid.back()) return values.back();
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double w = (t - grid[i]) / (grid[i + 1] - grid[i]);
  return values[i] + w * (values[i + 1] - values[i]);
}

MeanFunction estimate_mean(const std::vector<LongitudinalSample>& samples, Interval window,
                           double bandwidth, std::size_t grid_size,
                           std::vector<std::string>* warnings) {
  if (!(bandwidth > 0.0)) throw DataError("mean bandwidth must be positive");
  std::vector<double> ts, ys;
  for (const auto& s : samples) {
    ts.insert(ts.end(), s.times.begin(), s.times.end());
    ys.insert(ys.end(), s.values.begin(), s.values.end());
  }
  if (ts.size() < 10) throw DataError("mean estimation needs at least 10 pooled observations");

  MeanFunction mean;
  mean.grid = make_grid(window, grid_size);
  mean.values.resize(grid_size);
  const bool uniform = bandwidth >= kWideBandFactor * window.length();
  bool widened = false;
  for (std::size_t g = 0; g < grid_size; ++g)
    mean.values[g] =
        local_linear_at(ts, ys, mean.grid[g], bandwidth, uniform, window.length(), &widened);
  if (widened && warnings)
    warnings->push_back("mean smoother: bandwidth widened at grid points with no kernel mass");
  return mean;
}

CovarianceEstimate estimate_covariance(const std::vector<LongitudinalSample>& samples,
                                       const MeanFunction& mean, double bandwidth,
                                       std::vector<std::string>* warnings) {
  if (!(bandwidth > 0.0)) throw DataError("covariance bandwidth must be positive");
  const auto& grid = mean.grid;
  const double span = grid.back() - grid.front();

  std::vector<RawPair> pairs;
  std::vector<double> diag_t, diag_v;
  for (const auto& s : samples) {
    const std::size_t j_i = s.times.size();
    std::vector<double> resid(j_i);
    for (std::size_t j = 0; j < j_i; ++j) {
      resid[j] = s.values[j] - interp_grid(grid, mean.values, s.times[j]);
      diag_t.push_back(s.times[j]);
      diag_v.push_back(resid[j] * resid[j]);
    }
    for (std::size_t j = 0; j < j_i; ++j)
      for (std::size_t l = 0; l < j_i; ++l)
        if (j != l) pairs.push_back({s.times[j], s.times[l], resid[j] * resid[l]});
  }
  if (pairs.empty())
    throw DataError("covariance estimation needs a subject with at least 2 observations");
  std::sort(pairs.begin(), pairs.end(), [](const RawPair& a, const RawPair& b) { return a.s < b.s; });

  const std::size_t g = grid.size();
  std::vector<std::vector<double>> raw(g, std::vector<double>(g, 0.0));
  std::vector<std::uint8_t> row_widened(g, 0);
  detail::parallel_for(g, [&](std::size_t a) {
    bool flag = false;
    for (std::size_t b = 0; b < g; ++b)
      raw[a][b] = local_plane_at(pairs, grid[a], grid[b], bandwidth, span, &flag);
    row_widened[a] = flag ? 1 : 0;
  });
  const bool widened =
      std::any_of(row_widened.begin(), row_widened.end(), [](std::uint8_t f) { return f != 0; });

  CovarianceEstimate est;
  est.surface.assign(g, std::vector<double>(g, 0.0));
  for (std::size_t a = 0; a < g; ++a)
    for (std::size_t b = 0; b < g; ++b) est.surface[a][b] = 0.5 * (raw[a][b] + raw[b][a]);

  bool var_widened = false;
  double gap = 0.0;
  for (std::size_t a = 0; a < g; ++a) {
    const double v =
        local_linear_at(diag_t, diag_v, grid[a], bandwidth, false, span, &var_widened);
    gap += v - est.surface[a][a];
  }
  est.sigma2 = std::max(0.0, gap / static_cast<double>(g));
  if ((widened || var_widened) && warnings)
    warnings->push_back("covariance smoother: bandwidth widened at grid points with no kernel mass");
  return est;
}

FunctionalBasis eigendecompose(const CovarianceEstimate& cov, const MeanFunction& mean,
                               std::size_t p, std::vector<std::string>* warnings) {
  const std::size_t g = mean.grid.size();
  if (cov.surface.size() != g) throw DataError("covariance surface does not match the grid");
  if (p < 1 || p > g) throw DataError("component count must lie in [1, grid size]");
  for (std::size_t a = 0; a < g; ++a)
    for (std::size_t b = a + 1; b < g; ++b)
      if (std::abs(cov.surface[a][b] - cov.surface[b][a]) > 1e-9)
        throw DataError("covariance surface is not symmetric");

  const std::vector<double> w = trapezoid_weights(mean.grid);
  Eigen::MatrixXd weighted(g, g);
  for (std::size_t a = 0; a < g; ++a)
    for (std::size_t b = 0; b < g; ++b)
      weighted(a, b) = std::sqrt(w[a]) * cov.surface[a][b] * std::sqrt(w[b]);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(weighted);
  if (solver.info() != Eigen::Success) throw DataError("eigendecomposition failed to converge");

  FunctionalBasis basis;
  basis.grid = mean.grid;
  basis.mean = mean;
  basis.sigma2 = cov.sigma2;
  for (std::size_t m = 0; m < p; ++m) {
    const Eigen::Index idx = static_cast<Eigen::Index>(g - 1 - m);
    const double lambda = solver.eigenvalues()(idx);
    if (!(lambda > 0.0)) break;
    std::vector<double> xi(g);
    for (std::size_t k = 0; k < g; ++k) xi[k] = solver.eigenvectors()(k, idx) / std::sqrt(w[k]);
    double integral = 0.0;
    for (std::size_t k = 0; k < g; ++k) integral += w[k] * xi[k];
    bool flip = integral < -1e-12;
    if (std::abs(integral) <= 1e-12) {
      for (std::size_t k = 0; k < g; ++k)
        if (xi[k] != 0.0) {
          flip = xi[k] < 0.0;
          break;
        }
    }
    if (flip)
      for (double& x : xi) x = -x;
    basis.eigenvalues.push_back(lambda);
    basis.eigenfunctions.push_back(std::move(xi));
  }
  if (basis.eigenvalues.empty())
    throw DataError("covariance surface has no positive eigenvalues");
  if (basis.eigenvalues.size() < p && warnings)
    warnings->push_back("component count reduced to " + std::to_string(basis.eigenvalues.size()) +
                        ": only that many positive eigenvalues exist");
  return basis;
}

ScoreMatrix pace_scores(const std::vector<LongitudinalSample>& samples,
                        const FunctionalBasis& basis) {
  const std::size_t p = basis.n_components();
  ScoreMatrix scores;
  scores.rows = samples.size();
  scores.cols = p;
  scores.data.assign(scores.rows * p, 0.0);

  detail::parallel_for(samples.size(), [&](std::size_t i) {
    const auto& s = samples[i];
    const std::size_t j_i = s.times.size();
    if (j_i == 0) throw DataError("subject " + s.id + " has no observations");
    if (s.times.front() < basis.grid.front() - 1e-9 || s.times.back() > basis.grid.back() + 1e-9)
      throw DataError("subject " + s.id + " has observations outside the basis grid");

    Eigen::MatrixXd xi(j_i, p);
    Eigen::VectorXd centered(j_i);
    for (std::size_t j = 0; j < j_i; ++j) {
      centered(static_cast<Eigen::Index>(j)) =
          s.values[j] - interp_grid(basis.grid, basis.mean.values, s.times[j]);
      for (std::size_t m = 0; m < p; ++m)
        xi(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(m)) =
            interp_grid(basis.grid, basis.eigenfunctions[m], s.times[j]);
    }
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(j_i, j_i);
    for (std::size_t m = 0; m < p; ++m)
      sigma += basis.eigenvalues[m] * xi.col(static_cast<Eigen::Index>(m)) *
               xi.col(static_cast<Eigen::Index>(m)).transpose();
    sigma.diagonal().array() += basis.sigma2;

    auto degenerate = [](const Eigen::LDLT<Eigen::MatrixXd>& f) {
      const Eigen::VectorXd d = f.vectorD().cwiseAbs();
      return f.info() != Eigen::Success || !(d.minCoeff() > 1e-12 * d.maxCoeff());
    };
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma);
    if (degenerate(ldlt)) {
      const double jitter = 1e-10 * sigma.trace() / static_cast<double>(j_i);
      sigma.diagonal().array() += jitter;
      ldlt.compute(sigma);
      if (ldlt.info() != Eigen::Success)
        throw DataError("score system singular for subject " + s.id + " even after jitter");
    }
    const Eigen::VectorXd solved = ldlt.solve(centered);
    if (!solved.allFinite())
      throw DataError("score system singular for subject " + s.id + " even after jitter");
    for (std::size_t m = 0; m < p; ++m)
      scores.at(i, m) =
          basis.eigenvalues[m] * xi.col(static_cast<Eigen::Index>(m)).dot(solved);
  });
  return scores;
}

std::vector<double> reconstruct(const std::vector<double>& scores, const FunctionalBasis& basis) {
  if (scores.size() != basis.n_components())
    throw DataError("score length does not match the basis component count");
  std::vector<double> curve = basis.mean.values;
  for (std::size_t m = 0; m < scores.size(); ++m)
    for (std::size_t k = 0; k < curve.size(); ++k)
      curve[k] += scores[m] * basis.eigenfunctions[m][k];
  return curve;
}

std::string basis_to_json(const FunctionalBasis& basis) {
  nlohmann::json doc{{"grid", basis.grid},
                     {"mean", basis.mean.values},
                     {"eigenvalues", basis.eigenvalues},
                     {"eigenfunctions", basis.eigenfunctions},
                     {"sigma2", basis.sigma2}};
  return doc.dump();
}

FunctionalBasis basis_from_json(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text);
  FunctionalBasis basis;
  basis.grid = doc.at("grid").get<std::vector<double>>();
  basis.mean.grid = basis.grid;
  basis.mean.values = doc.at("mean").get<std::vector<double>>();
  basis.eigenvalues = doc.at("eigenvalues").get<std::vector<double>>();
  basis.eigenfunctions = doc.at("eigenfunctions").get<std::vector<std::vector<double>>>();
  basis.sigma2 = doc.at("sigma2").get<double>();
  if (basis.mean.values.size() != basis.grid.size())
    throw DataError("basis JSON: mean length does not match grid");
  for (const auto& xi : basis.eigenfunctions)
    if (xi.size() != basis.grid.size())
      throw DataError("basis JSON: eigenfunction length does not match grid");
  if (basis.eigenfunctions.size() != basis.eigenvalues.size())
    throw DataError("basis JSON: eigenvalue/eigenfunction count mismatch");
  return basis;
}

void write_scores(const std::string& path, const std::vector<std::string>& ids,
                  const ScoreMatrix& scores) {
  if (ids.size() != scores.rows) throw DataError("score export: id count mismatch");
  std::string out = "id";
  for (std::size_t m = 1; m <= scores.cols; ++m) out += ",pc" + std::to_string(m);
  out += "\n";
  for (std::size_t i = 0; i < scores.rows; ++i) {
    out += ids[i];
    for (std::size_t m = 0; m < scores.cols; ++m)
      out += "," + detail::format_double(scores.at(i, m));
    out += "\n";
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot write file: " + path);
  file << out;
}

std::pair<std::vector<std::string>, ScoreMatrix> load_scores(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open file: " + path);
  std::string line;
  if (!std::getline(file, line)) throw DataError("empty scores file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::size_t cols = 0;
  {
    std::istringstream head(line);
    std::string cell;
    if (!std::getline(head, cell, ',') || cell != "id")
      throw DataError("scores file must start with an id column");
    while (std::getline(head, cell, ',')) {
      ++cols;
      if (cell != "pc" + std::to_string(cols))
        throw DataError("scores header must read id,pc1..pcp");
    }
  }
  std::vector<std::string> ids;
  ScoreMatrix scores;
  scores.cols = cols;
  std::size_t row = 1;
  while (std::getline(file, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');
    ids.push_back(cell);
    std::size_t got = 0;
    while (std::getline(cells, cell, ',')) {
      scores.data.push_back(detail::parse_double(cell, "row " + std::to_string(row)));
      ++got;
    }
    if (got != cols)
      throw DataError("row " + std::to_string(row) + ": expected " + std::to_string(cols) +
                      " scores, got " + std::to_string(got));
  }
  scores.rows = ids.size();
  return {std::move(ids), std::move(scores)};
}

}  // namespace fsurv
