#include "fsurv/survshap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <Eigen/Dense>

#include "fsurv/detail/numfmt.hpp"
#include "fsurv/detail/parallel.hpp"
#include "fsurv/smoothfn.hpp"
#include "fsurv/tree.hpp"

namespace fsurv {

std::vector<Interval> event_free_intervals(const std::vector<double>& distinct_event_times) {
  std::vector<Interval> out;
  for (std::size_t k = 0; k + 1 < distinct_event_times.size(); ++k)
    out.push_back({distinct_event_times[k], distinct_event_times[k + 1]});
  return out;
}

std::vector<Interval> event_free_intervals(const MixedSurvivalDataset& data) {
  return event_free_intervals(event_times(data));
}

std::vector<std::vector<double>> background_rows(const FeatureMatrix& features,
                                                 std::size_t max_rows) {
  if (features.rows == 0) throw DataError("background needs at least one row");
  if (max_rows == 0) throw DataError("background size must be positive");
  const std::size_t keep = std::min(features.rows, max_rows);
  std::vector<std::vector<double>> rows;
  rows.reserve(keep);
  for (std::size_t k = 0; k < keep; ++k) {
    const std::size_t i = k * features.rows / keep;
    std::vector<double> row(features.cols);
    for (std::size_t j = 0; j < features.cols; ++j) row[j] = features.at(i, j);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

// Background-averaged survival values on the whole grid for one coalition,
// encoded as a bitmask of pinned columns.
std::vector<double> coalition_values(const Forest& model, const std::vector<double>& w,
                                     std::uint64_t mask,
                                     const std::vector<std::vector<double>>& background,
                                     const std::vector<double>& times) {
  std::vector<double> acc(times.size(), 0.0);
  std::vector<double> hybrid;
  for (const auto& row : background) {
    hybrid = row;
    for (std::size_t j = 0; j < w.size(); ++j)
      if (mask & (std::uint64_t{1} << j)) hybrid[j] = w[j];
    const auto [chf, sf] = predict_forest(model, hybrid);
    const std::vector<double> vals = eval_on_grid(sf, times);
    for (std::size_t m = 0; m < acc.size(); ++m) acc[m] += vals[m];
  }
  for (double& v : acc) v /= static_cast<double>(background.size());
  return acc;
}

void check_inputs(const Forest& model, const std::vector<double>& w,
                  const std::vector<std::vector<double>>& background,
                  const std::vector<double>& times) {
  if (w.size() != model.column_kinds.size())
    throw DataError("feature vector length does not match the forest");
  if (background.empty()) throw DataError("background needs at least one row");
  for (const auto& row : background)
    if (row.size() != w.size()) throw DataError("background row width mismatch");
  if (times.empty()) throw DataError("no evaluation times");
}

}  // namespace

double value_function(const Forest& model, const std::vector<double>& w,
                      const std::vector<std::size_t>& subset,
                      const std::vector<std::vector<double>>& background, double t) {
  check_inputs(model, w, background, {t});
  std::uint64_t mask = 0;
  for (std::size_t j : subset) {
    if (j >= w.size()) throw DataError("subset column out of range");
    mask |= std::uint64_t{1} << j;
  }
  return coalition_values(model, w, mask, background, {t}).front();
}

ShapMatrix survshap_exact(const Forest& model, const std::vector<double>& w,
                          const std::vector<std::vector<double>>& background,
                          const std::vector<double>& times) {
  check_inputs(model, w, background, times);
  const std::size_t d = w.size();
  if (d == 0) throw DataError("no features to attribute");
  if (d > 12)
    throw DataError("exact enumeration supports at most 12 features; use survshap_kernel");
  const std::size_t n_masks = std::size_t{1} << d;
  std::vector<std::vector<double>> values(n_masks);
  detail::parallel_for(n_masks, [&](std::size_t mask) {
    values[mask] = coalition_values(model, w, mask, background, times);
  });

  std::vector<double> factorial(d + 1, 1.0);
  for (std::size_t k = 1; k <= d; ++k) factorial[k] = factorial[k - 1] * static_cast<double>(k);

  const std::size_t M = times.size();
  ShapMatrix shap;
  shap.times = times;
  shap.n_features = d;
  shap.phi.assign(M * d, 0.0);
  shap.baseline = values[0];
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    const std::size_t s = static_cast<std::size_t>(std::popcount(mask));
    if (s == d) continue;
    const double weight = factorial[s] * factorial[d - s - 1] / factorial[d];
    const std::vector<double>& without = values[mask];
    for (std::size_t j = 0; j < d; ++j) {
      const std::uint64_t bit = std::uint64_t{1} << j;
      if (mask & bit) continue;
      const std::vector<double>& with_j = values[mask | bit];
      for (std::size_t m = 0; m < M; ++m)
        shap.phi[m * d + j] += weight * (with_j[m] - without[m]);
    }
  }
  normalize(shap);
  return shap;
}

double kernel_weight(std::size_t k, std::size_t d) {
  if (d < 2) throw DataError("kernel weight needs at least two features");
  if (k == 0 || k >= d) throw DataError("kernel weight undefined for the constraint coalitions");
  std::uint64_t binom = 1;
  const std::size_t r = std::min(k, d - k);
  for (std::size_t i = 1; i <= r; ++i) binom = binom * (d - r + i) / i;
  return static_cast<double>(d - 1) /
         (static_cast<double>(binom) * static_cast<double>(k) * static_cast<double>(d - k));
}

ShapMatrix survshap_kernel(const Forest& model, const std::vector<double>& w,
                           const std::vector<std::vector<double>>& background,
                           const std::vector<double>& times, std::size_t coalition_budget,
                           Rng& rng) {
  check_inputs(model, w, background, times);
  const std::size_t d = w.size();
  if (d == 0) throw DataError("no features to attribute");
  if (d > 63) throw DataError("coalition masks support at most 63 features");
  const std::size_t M = times.size();

  ShapMatrix shap;
  shap.times = times;
  shap.n_features = d;
  shap.phi.assign(M * d, 0.0);
  shap.baseline = coalition_values(model, w, 0, background, times);
  const std::uint64_t full = (std::uint64_t{1} << d) - 1;
  const std::vector<double> v_full = coalition_values(model, w, full, background, times);

  if (d == 1) {
    for (std::size_t m = 0; m < M; ++m) shap.phi[m] = v_full[m] - shap.baseline[m];
    normalize(shap);
    return shap;
  }
  if (coalition_budget < 2 * d + 2)
    throw DataError("coalition budget below 2(q+p)+2");

  // Proper coalitions: enumerate when the budget covers them all, otherwise
  // sample without replacement with sizes drawn by total kernel mass.
  std::vector<std::uint64_t> masks;
  const bool enumerable = d <= 24;
  const std::uint64_t total = enumerable ? (std::uint64_t{1} << d) - 2 : 0;
  if (enumerable && coalition_budget >= total) {
    masks.reserve(total);
    for (std::uint64_t mask = 1; mask < full; ++mask) masks.push_back(mask);
  } else {
    std::vector<double> size_cdf(d - 1, 0.0);
    double mass = 0.0;
    for (std::size_t k = 1; k < d; ++k) {
      mass += static_cast<double>(d - 1) / static_cast<double>(k * (d - k));
      size_cdf[k - 1] = mass;
    }
    std::unordered_set<std::uint64_t> seen;
    std::vector<std::size_t> pool(d);
    std::size_t attempts = 0;
    const std::size_t max_attempts = 50 * coalition_budget;
    while (masks.size() < coalition_budget && attempts < max_attempts) {
      ++attempts;
      const double u = rng.uniform01() * mass;
      std::size_t k = 1;
      while (k < d - 1 && u > size_cdf[k - 1]) ++k;
      for (std::size_t j = 0; j < d; ++j) pool[j] = j;
      std::uint64_t mask = 0;
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t pick = j + static_cast<std::size_t>(rng.below(d - j));
        std::swap(pool[j], pool[pick]);
        mask |= std::uint64_t{1} << pool[j];
      }
      if (seen.insert(mask).second) masks.push_back(mask);
    }
    for (std::uint64_t mask = 1; enumerable && mask < full && masks.size() < coalition_budget;
         ++mask)
      if (seen.insert(mask).second) masks.push_back(mask);
  }

  std::vector<std::vector<double>> values(masks.size());
  detail::parallel_for(masks.size(), [&](std::size_t i) {
    values[i] = coalition_values(model, w, masks[i], background, times);
  });

  // WLS with the pivot feature d-1 eliminated by the efficiency constraints.
  const std::size_t u = d - 1;
  Eigen::MatrixXd x(masks.size(), u);
  Eigen::VectorXd weights(masks.size());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const std::uint64_t mask = masks[i];
    const double z_pivot = (mask >> u) & 1 ? 1.0 : 0.0;
    for (std::size_t j = 0; j < u; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          ((mask >> j) & 1 ? 1.0 : 0.0) - z_pivot;
    weights(static_cast<Eigen::Index>(i)) =
        kernel_weight(static_cast<std::size_t>(std::popcount(mask)), d);
  }
  const Eigen::MatrixXd xtw = x.transpose() * weights.asDiagonal();
  Eigen::MatrixXd normal = xtw * x;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success || !ldlt.solve(Eigen::VectorXd::Ones(u)).allFinite()) {
    normal += 1e-10 * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(u),
                                                static_cast<Eigen::Index>(u));
    ldlt.compute(normal);
    if (ldlt.info() != Eigen::Success)
      throw DataError("kernel regression is singular even after jitter");
  }

  Eigen::VectorXd y(masks.size());
  for (std::size_t m = 0; m < M; ++m) {
    const double span = v_full[m] - shap.baseline[m];
    for (std::size_t i = 0; i < masks.size(); ++i) {
      const double z_pivot = (masks[i] >> u) & 1 ? 1.0 : 0.0;
      y(static_cast<Eigen::Index>(i)) = values[i][m] - shap.baseline[m] - z_pivot * span;
    }
    const Eigen::VectorXd beta = ldlt.solve(xtw * y);
    if (!beta.allFinite()) throw DataError("kernel regression is singular even after jitter");
    double rest = 0.0;
    for (std::size_t j = 0; j < u; ++j) {
      shap.phi[m * d + j] = beta(static_cast<Eigen::Index>(j));
      rest += beta(static_cast<Eigen::Index>(j));
    }
    shap.phi[m * d + u] = span - rest;
  }
  normalize(shap);
  return shap;
}

void normalize(ShapMatrix& shap) {
  if (shap.phi.size() != shap.times.size() * shap.n_features)
    throw DataError("contribution matrix not filled");
  shap.normalized.assign(shap.phi.size(), 0.0);
  for (std::size_t m = 0; m < shap.times.size(); ++m) {
    double denom = 0.0;
    for (std::size_t j = 0; j < shap.n_features; ++j)
      denom += std::abs(shap.phi[m * shap.n_features + j]);
    if (denom == 0.0) continue;
    for (std::size_t j = 0; j < shap.n_features; ++j)
      shap.normalized[m * shap.n_features + j] = shap.phi[m * shap.n_features + j] / denom;
  }
}

namespace {

std::pair<std::size_t, std::size_t> locate_interval(const std::vector<double>& times,
                                                    Interval interval) {
  const auto lo = std::find(times.begin(), times.end(), interval.lo);
  const auto hi = std::find(times.begin(), times.end(), interval.hi);
  if (lo == times.end() || hi == times.end() || hi != lo + 1)
    throw DataError("interval is not a span between consecutive event times");
  return {static_cast<std::size_t>(lo - times.begin()),
          static_cast<std::size_t>(hi - times.begin())};
}

}  // namespace

ContributionSummary shap_summary(const ShapMatrix& shap, std::size_t feature, Interval interval,
                                 std::optional<double> lambda) {
  if (feature >= shap.n_features) throw DataError("feature index out of range");
  if (shap.normalized.size() != shap.phi.size())
    throw DataError("normalized contributions not filled");
  const auto [lo_idx, hi_idx] = locate_interval(shap.times, interval);
  std::vector<double> series(shap.times.size());
  for (std::size_t m = 0; m < series.size(); ++m)
    series[m] = shap.normalized_at(m, feature);

  const double penalty = lambda ? *lambda : select_lambda(shap.times, series);
  const SmoothCurve fit = fit_penalized(shap.times, series, penalty);

  ContributionSummary out;
  out.unit_id = shap.unit_id;
  out.feature = feature;
  out.interval = interval;
  out.phi_at_lo = series[lo_idx];
  out.phi_at_hi = series[hi_idx];
  out.delta = integrate(fit, interval.lo, interval.hi);
  out.gamma = trapezoid_aggregate(shap.times, series, interval.lo, interval.hi);
  out.tsd = out.delta - out.gamma;
  out.tnsd = out.tsd / interval.length();
  return out;
}

void write_shap_csv(const std::string& path, const ShapMatrix& shap,
                    const std::vector<std::string>& feature_names) {
  if (feature_names.size() != shap.n_features) throw DataError("feature name count mismatch");
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "t,feature,phi,phi_star\n";
  for (std::size_t m = 0; m < shap.times.size(); ++m)
    for (std::size_t j = 0; j < shap.n_features; ++j)
      out << detail::format_double(shap.times[m]) << ',' << feature_names[j] << ','
          << detail::format_double(shap.phi_at(m, j)) << ','
          << detail::format_double(shap.normalized_at(m, j)) << '\n';
}

void write_shap_summary_csv(const std::string& path,
                            const std::vector<ContributionSummary>& rows,
                            const std::vector<std::string>& feature_names) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "feature,interval,phi_star_at_ta,phi_star_at_tb,tsd,tnsd\n";
  for (const ContributionSummary& row : rows) {
    if (row.feature >= feature_names.size()) throw DataError("feature index out of range");
    out << feature_names[row.feature] << ',' << detail::format_double(row.interval.lo) << ':'
        << detail::format_double(row.interval.hi) << ',' << detail::format_double(row.phi_at_lo)
        << ',' << detail::format_double(row.phi_at_hi) << ',' << detail::format_double(row.tsd)
        << ',' << detail::format_double(row.tnsd) << '\n';
  }
}

}  // namespace fsurv
