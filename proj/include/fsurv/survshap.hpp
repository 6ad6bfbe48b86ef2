#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fsurv/forest.hpp"
#include "fsurv/rng.hpp"

namespace fsurv {

// Time-resolved feature contributions for one unit: phi[m][j] is feature j's
// share of Shat(t_m | w) - baseline(t_m).
struct ShapMatrix {
  std::string unit_id;
  std::vector<double> times;
  std::size_t n_features = 0;
  std::vector<double> phi;         // row-major, times x features
  std::vector<double> normalized;  // phi scaled so each row's |.| sums to 1
  std::vector<double> baseline;    // background mean prediction per time

  double phi_at(std::size_t m, std::size_t j) const { return phi[m * n_features + j]; }
  double normalized_at(std::size_t m, std::size_t j) const {
    return normalized[m * n_features + j];
  }
};

struct ContributionSummary {
  std::string unit_id;
  std::size_t feature = 0;
  Interval interval;
  double phi_at_lo = 0.0;  // normalized series at the interval ends
  double phi_at_hi = 0.0;
  double delta = 0.0;  // integral of the smoothed series
  double gamma = 0.0;  // trapezoid aggregate of the raw series
  double tsd = 0.0;
  double tnsd = 0.0;
};

// Maximal spans between consecutive distinct observed event times; fewer than
// two event times yield an empty list.
std::vector<Interval> event_free_intervals(const std::vector<double>& distinct_event_times);
std::vector<Interval> event_free_intervals(const MixedSurvivalDataset& data);

// Deterministic evenly spaced row subsample used as the marginal background.
std::vector<std::vector<double>> background_rows(const FeatureMatrix& features,
                                                 std::size_t max_rows = 100);

// Marginal expectation of the ensemble survival at t: background rows with the
// subset's columns overwritten by w's values, predictions averaged.
double value_function(const Forest& model, const std::vector<double>& w,
                      const std::vector<std::size_t>& subset,
                      const std::vector<std::vector<double>>& background, double t);

// Permutation-average contributions, computed in the weighted-subset form so
// every coalition is evaluated once.  Feature counts above 12 must go through
// survshap_kernel instead.
ShapMatrix survshap_exact(const Forest& model, const std::vector<double>& w,
                          const std::vector<std::vector<double>>& background,
                          const std::vector<double>& times);

// Shapley kernel weight for a coalition of size k out of d features.
double kernel_weight(std::size_t k, std::size_t d);

// Weighted-least-squares approximation over sampled coalitions; the empty and
// full coalitions enter as exact constraints, so contributions sum to
// prediction minus baseline at every time.  A budget covering all 2^d - 2
// proper coalitions reproduces the exact result.
ShapMatrix survshap_kernel(const Forest& model, const std::vector<double>& w,
                           const std::vector<std::vector<double>>& background,
                           const std::vector<double>& times, std::size_t coalition_budget,
                           Rng& rng);

// Fills normalized: each row divided by its absolute sum, zero rows kept zero.
void normalize(ShapMatrix& shap);

// TSD/TNSD of one feature's normalized series over an event-free interval.
// lambda overrides the cross-validated smoothing penalty.
ContributionSummary shap_summary(const ShapMatrix& shap, std::size_t feature, Interval interval,
                                 std::optional<double> lambda = std::nullopt);

void write_shap_csv(const std::string& path, const ShapMatrix& shap,
                    const std::vector<std::string>& feature_names);
void write_shap_summary_csv(const std::string& path,
                            const std::vector<ContributionSummary>& rows,
                            const std::vector<std::string>& feature_names);

}  // namespace fsurv
