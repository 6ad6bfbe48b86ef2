#include "fsurv/pfi.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "fsurv/detail/numfmt.hpp"
#include "fsurv/detail/parallel.hpp"
#include "fsurv/survcore.hpp"

namespace fsurv {

namespace {

// Rows with at least one out-of-bag tree; only these can be scored honestly.
std::vector<std::size_t> scorable_rows(const Forest& forest) {
  std::vector<std::uint8_t> seen(forest.n_subjects, 0);
  for (const auto& oob : forest.oob)
    for (std::size_t i : oob) seen[i] = 1;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (seen[i]) rows.push_back(i);
  return rows;
}

std::vector<double> oob_losses(const Forest& model, const MixedSurvivalDataset& data,
                               const FeatureMatrix& features, std::size_t permuted_column,
                               const std::vector<std::size_t>* permutation,
                               const std::vector<double>& times) {
  if (features.rows != data.size() || features.rows != model.n_subjects)
    throw DataError("feature rows do not match the forest");
  const std::vector<std::size_t> rows = scorable_rows(model);
  if (rows.empty()) throw DataError("no subject is out of bag in any tree");

  std::vector<StepFunction> sf(rows.size());
  detail::parallel_for(rows.size(), [&](std::size_t k) {
    const std::size_t i = rows[k];
    std::vector<double> w(features.cols);
    for (std::size_t j = 0; j < features.cols; ++j) w[j] = features.at(i, j);
    if (permutation) w[permuted_column] = features.at((*permutation)[i], permuted_column);
    sf[k] = oob_ensemble_sf(model, i, w);
  });

  std::vector<double> observed(rows.size());
  std::vector<std::uint8_t> status(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    observed[k] = data.survival[rows[k]].event_time;
    status[k] = data.survival[rows[k]].status;
  }
  std::vector<double> losses(times.size());
  for (std::size_t m = 0; m < times.size(); ++m)
    losses[m] = ipcw_brier(sf, observed, status, times[m]);
  return losses;
}

}  // namespace

std::vector<double> baseline_loss(const Forest& model, const MixedSurvivalDataset& data,
                                  const FeatureMatrix& features,
                                  const std::vector<double>& times) {
  return oob_losses(model, data, features, 0, nullptr, times);
}

std::vector<double> permuted_loss(const Forest& model, const MixedSurvivalDataset& data,
                                  const FeatureMatrix& features, std::size_t feature,
                                  const std::vector<std::size_t>& permutation,
                                  const std::vector<double>& times) {
  if (feature >= features.cols) throw DataError("feature index out of range");
  if (permutation.size() != features.rows) throw DataError("permutation length mismatch");
  return oob_losses(model, data, features, feature, &permutation, times);
}

std::vector<double> permuted_loss(const Forest& model, const MixedSurvivalDataset& data,
                                  const FeatureMatrix& features, std::size_t feature, Rng& rng,
                                  const std::vector<double>& times) {
  std::vector<std::size_t> permutation(features.rows);
  for (std::size_t i = 0; i < permutation.size(); ++i) permutation[i] = i;
  for (std::size_t i = permutation.size(); i > 1; --i)
    std::swap(permutation[i - 1], permutation[static_cast<std::size_t>(rng.below(i))]);
  return permuted_loss(model, data, features, feature, permutation, times);
}

ImportanceCurve averaged_importance(const Forest& model, const MixedSurvivalDataset& data,
                                    const FeatureMatrix& features, std::size_t feature,
                                    std::size_t repeats, std::uint64_t seed) {
  if (repeats == 0) throw DataError("importance needs at least one repeat");
  const std::vector<double> baseline = baseline_loss(model, data, features, model.event_grid);
  ImportanceCurve curve;
  curve.feature = feature;
  curve.times = model.event_grid;
  curve.repeats = repeats;
  curve.raw.assign(baseline.size(), 0.0);
  for (std::size_t r = 0; r < repeats; ++r) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(feature), r}));
    const std::vector<double> permuted =
        permuted_loss(model, data, features, feature, rng, model.event_grid);
    for (std::size_t m = 0; m < curve.raw.size(); ++m)
      curve.raw[m] += baseline[m] - permuted[m];
  }
  for (double& v : curve.raw) v /= static_cast<double>(repeats);
  curve.smooth = fit_penalized(curve.times, curve.raw, select_lambda(curve.times, curve.raw));
  return curve;
}

ImportanceSummary importance_summary(const ImportanceCurve& curve, Interval interval,
                                     std::optional<double> lambda) {
  const auto lo = std::find(curve.times.begin(), curve.times.end(), interval.lo);
  const auto hi = std::find(curve.times.begin(), curve.times.end(), interval.hi);
  if (lo == curve.times.end() || hi == curve.times.end() || hi != lo + 1)
    throw DataError("interval is not a span between consecutive event times");
  const SmoothCurve fit =
      lambda ? fit_penalized(curve.times, curve.raw, *lambda) : curve.smooth;
  ImportanceSummary out;
  out.feature = curve.feature;
  out.interval = interval;
  out.fi_at_lo = curve.raw[static_cast<std::size_t>(lo - curve.times.begin())];
  out.fi_at_hi = curve.raw[static_cast<std::size_t>(hi - curve.times.begin())];
  const double delta = integrate(fit, interval.lo, interval.hi);
  const double upsilon = trapezoid_aggregate(curve.times, curve.raw, interval.lo, interval.hi);
  out.mtgd = delta - upsilon;
  out.mtngd = out.mtgd / interval.length();
  return out;
}

std::vector<RankedFeature> rank_features(const Forest& model, const MixedSurvivalDataset& data,
                                         const FeatureMatrix& features, std::size_t repeats,
                                         std::uint64_t seed) {
  std::vector<RankedFeature> ranking;
  for (std::size_t j = 0; j < features.cols; ++j) {
    const ImportanceCurve curve = averaged_importance(model, data, features, j, repeats, seed);
    double mean = 0.0;
    for (double v : curve.raw) mean += v;
    mean /= static_cast<double>(curve.raw.size());
    ranking.push_back({j, std::abs(mean)});
  }
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const RankedFeature& a, const RankedFeature& b) { return a.score > b.score; });
  return ranking;
}

void write_importance_csv(const std::string& path, const ImportanceCurve& curve) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "t,fi_bar\n";
  for (std::size_t m = 0; m < curve.times.size(); ++m)
    out << detail::format_double(curve.times[m]) << ',' << detail::format_double(curve.raw[m])
        << '\n';
}

void write_importance_summary_csv(const std::string& path,
                                  const std::vector<ImportanceSummary>& rows,
                                  const std::vector<std::string>& feature_names) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "feature,interval,fi_at_ta,fi_at_tb,mtgd,mtngd\n";
  for (const ImportanceSummary& row : rows) {
    if (row.feature >= feature_names.size()) throw DataError("feature index out of range");
    out << feature_names[row.feature] << ',' << detail::format_double(row.interval.lo) << ':'
        << detail::format_double(row.interval.hi) << ',' << detail::format_double(row.fi_at_lo)
        << ',' << detail::format_double(row.fi_at_hi) << ',' << detail::format_double(row.mtgd)
        << ',' << detail::format_double(row.mtngd) << '\n';
  }
}

void write_ranking_csv(const std::string& path, const std::vector<RankedFeature>& ranking,
                       const std::vector<std::string>& feature_names) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "feature,mean_importance_magnitude\n";
  for (const RankedFeature& row : ranking) {
    if (row.feature >= feature_names.size()) throw DataError("feature index out of range");
    out << feature_names[row.feature] << ',' << detail::format_double(row.score) << '\n';
  }
}

}  // namespace fsurv
