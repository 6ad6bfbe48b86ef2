#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fsurv/fpca.hpp"
#include "fsurv/rng.hpp"
#include "fsurv/tree.hpp"
#include "fsurv/types.hpp"

namespace testutil {

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k)
    out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  return out;
}

inline std::vector<double> trapezoid_weights(const std::vector<double>& grid) {
  std::vector<double> w(grid.size(), 0.0);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double h = 0.5 * (grid[k + 1] - grid[k]);
    w[k] += h;
    w[k + 1] += h;
  }
  return w;
}

inline double inner(const std::vector<double>& grid, const std::vector<double>& a,
                    const std::vector<double>& b) {
  const std::vector<double> w = trapezoid_weights(grid);
  double s = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) s += w[k] * a[k] * b[k];
  return s;
}

// Gram-Schmidt under the trapezoid inner product, so hand-built curves satisfy
// the same orthonormality the eigendecomposition guarantees.
inline std::vector<std::vector<double>> orthonormalize(const std::vector<double>& grid,
                                                       std::vector<std::vector<double>> curves) {
  for (std::size_t m = 0; m < curves.size(); ++m) {
    for (std::size_t n = 0; n < m; ++n) {
      const double proj = inner(grid, curves[m], curves[n]);
      for (std::size_t k = 0; k < grid.size(); ++k) curves[m][k] -= proj * curves[n][k];
    }
    const double norm = std::sqrt(inner(grid, curves[m], curves[m]));
    for (double& v : curves[m]) v /= norm;
  }
  return curves;
}

inline fsurv::FunctionalBasis analytic_basis(const std::vector<double>& grid,
                                             const std::vector<double>& mean,
                                             std::vector<std::vector<double>> curves,
                                             std::vector<double> eigenvalues,
                                             double sigma2 = 0.0) {
  fsurv::FunctionalBasis basis;
  basis.grid = grid;
  basis.mean.grid = grid;
  basis.mean.values = mean;
  basis.eigenfunctions = orthonormalize(grid, std::move(curves));
  for (auto& xi : basis.eigenfunctions) {
    double integral = 0.0;
    const std::vector<double> w = trapezoid_weights(grid);
    for (std::size_t k = 0; k < grid.size(); ++k) integral += w[k] * xi[k];
    if (integral < 0.0)
      for (double& v : xi) v = -v;
  }
  basis.eigenvalues = std::move(eigenvalues);
  basis.sigma2 = sigma2;
  return basis;
}

inline fsurv::ScoreMatrix make_scores(std::size_t rows, std::size_t cols,
                                      const std::vector<double>& entries) {
  fsurv::ScoreMatrix scores;
  scores.rows = rows;
  scores.cols = cols;
  scores.data = entries;
  return scores;
}

// Survival-only dataset with scalar feature columns; the longitudinal side is
// a placeholder since trees and forests consume only features and outcomes.
struct ScalarDesign {
  fsurv::MixedSurvivalDataset data;
  fsurv::FeatureMatrix features;
};

inline ScalarDesign scalar_design(const std::vector<std::vector<double>>& columns,
                                  const std::vector<double>& times,
                                  const std::vector<std::uint8_t>& status) {
  const std::size_t n = times.size();
  ScalarDesign out;
  out.data.window = {0.0, 1.0};
  for (std::size_t i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "s%03u", static_cast<unsigned>(i + 1));
    fsurv::LongitudinalSample sample;
    sample.id = id;
    sample.times = {0.1, 0.5, 0.9};
    sample.values = {0.0, 0.0, 0.0};
    out.data.samples.push_back(std::move(sample));
    fsurv::SurvivalRecord rec;
    rec.id = id;
    rec.event_time = times[i];
    rec.status = status[i];
    for (const auto& column : columns) rec.covariates.push_back(column[i]);
    out.data.survival.push_back(std::move(rec));
    if (out.data.window.hi < times[i]) out.data.window.hi = times[i];
  }
  out.features = fsurv::make_features(out.data, make_scores(n, 0, {}));
  return out;
}

// Unique per-test scratch directory under the system temp root.
inline std::string scratch_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("fsurv_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace testutil
