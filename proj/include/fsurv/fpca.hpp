#pragma once

#include <string>
#include <vector>

#include "fsurv/types.hpp"

namespace fsurv {

struct MeanFunction {
  std::vector<double> grid;    // equispaced over the study window
  std::vector<double> values;  // mu(t) on grid
};

struct FunctionalBasis {
  std::vector<double> grid;
  MeanFunction mean;
  std::vector<double> eigenvalues;                  // decreasing, > 0
  std::vector<std::vector<double>> eigenfunctions;  // p curves on grid
  double sigma2 = 0.0;                              // observation noise variance

  std::size_t n_components() const { return eigenvalues.size(); }
};

struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  double at(std::size_t i, std::size_t m) const { return data[i * cols + m]; }
  double& at(std::size_t i, std::size_t m) { return data[i * cols + m]; }
};

// Local linear smoother of the pooled observations on an equispaced grid.
// Bandwidths at or beyond 10x the window reduce to the global least-squares
// line.  Grid points with no kernel mass widen their bandwidth and warn.
MeanFunction estimate_mean(const std::vector<LongitudinalSample>& samples, Interval window,
                           double bandwidth, std::size_t grid_size = 101,
                           std::vector<std::string>* warnings = nullptr);

struct CovarianceEstimate {
  std::vector<std::vector<double>> surface;  // G x G, symmetric
  double sigma2 = 0.0;
};

// Off-diagonal residual cross-products smoothed onto the grid surface; the
// diagonal gap against a variance smooth estimates the noise.
CovarianceEstimate estimate_covariance(const std::vector<LongitudinalSample>& samples,
                                       const MeanFunction& mean, double bandwidth,
                                       std::vector<std::string>* warnings = nullptr);

// Top-p eigenpairs of the quadrature-weighted surface.  Eigenfunctions have
// unit L2 norm and nonnegative integral; p shrinks (with a warning) to the
// count of positive eigenvalues.
FunctionalBasis eigendecompose(const CovarianceEstimate& cov, const MeanFunction& mean,
                               std::size_t p, std::vector<std::string>* warnings = nullptr);

// Conditional-expectation scores for each subject given the basis.
ScoreMatrix pace_scores(const std::vector<LongitudinalSample>& samples,
                        const FunctionalBasis& basis);

// mu + sum_m score_m * xi_m on the basis grid.
std::vector<double> reconstruct(const std::vector<double>& scores, const FunctionalBasis& basis);

// Linear interpolation of a gridded curve, clamped to the grid range.
double interp_grid(const std::vector<double>& grid, const std::vector<double>& values, double t);

std::string basis_to_json(const FunctionalBasis& basis);
FunctionalBasis basis_from_json(const std::string& text);

void write_scores(const std::string& path, const std::vector<std::string>& ids,
                  const ScoreMatrix& scores);
std::pair<std::vector<std::string>, ScoreMatrix> load_scores(const std::string& path);

}  // namespace fsurv
