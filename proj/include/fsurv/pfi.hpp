#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fsurv/forest.hpp"
#include "fsurv/rng.hpp"
#include "fsurv/smoothfn.hpp"

namespace fsurv {

// Averaged time importance of one feature: raw[m] is the mean over repeats of
// baseline loss minus permuted loss at times[m] (baseline-minus-permuted sign
// kept throughout; rankings use magnitudes).
struct ImportanceCurve {
  std::size_t feature = 0;
  std::vector<double> times;
  std::vector<double> raw;
  std::size_t repeats = 1;
  SmoothCurve smooth;
};

struct ImportanceSummary {
  std::size_t feature = 0;
  Interval interval;
  double fi_at_lo = 0.0;
  double fi_at_hi = 0.0;
  double mtgd = 0.0;  // smoothed integral minus raw trapezoid aggregate
  double mtngd = 0.0;
};

struct RankedFeature {
  std::size_t feature = 0;
  double score = 0.0;  // |mean over the grid of the averaged importance|
};

// Censoring-weighted Brier losses on the grid, from out-of-bag ensemble
// predictions.  Subjects that are in-bag everywhere are left out.
std::vector<double> baseline_loss(const Forest& model, const MixedSurvivalDataset& data,
                                  const FeatureMatrix& features, const std::vector<double>& times);

// Same loss after routing each subject with feature column j permuted by the
// given row permutation (or one drawn uniformly from rng).
std::vector<double> permuted_loss(const Forest& model, const MixedSurvivalDataset& data,
                                  const FeatureMatrix& features, std::size_t feature,
                                  const std::vector<std::size_t>& permutation,
                                  const std::vector<double>& times);
std::vector<double> permuted_loss(const Forest& model, const MixedSurvivalDataset& data,
                                  const FeatureMatrix& features, std::size_t feature, Rng& rng,
                                  const std::vector<double>& times);

ImportanceCurve averaged_importance(const Forest& model, const MixedSurvivalDataset& data,
                                    const FeatureMatrix& features, std::size_t feature,
                                    std::size_t repeats, std::uint64_t seed);

// MTGD/MTNGD of the averaged curve over an event-free interval; lambda
// overrides the cross-validated smoothing penalty.
ImportanceSummary importance_summary(const ImportanceCurve& curve, Interval interval,
                                     std::optional<double> lambda = std::nullopt);

// All features ordered by descending magnitude of mean importance.
std::vector<RankedFeature> rank_features(const Forest& model, const MixedSurvivalDataset& data,
                                         const FeatureMatrix& features, std::size_t repeats,
                                         std::uint64_t seed);

void write_importance_csv(const std::string& path, const ImportanceCurve& curve);
void write_importance_summary_csv(const std::string& path,
                                  const std::vector<ImportanceSummary>& rows,
                                  const std::vector<std::string>& feature_names);
void write_ranking_csv(const std::string& path, const std::vector<RankedFeature>& ranking,
                       const std::vector<std::string>& feature_names);

}  // namespace fsurv
