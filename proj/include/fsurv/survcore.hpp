#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fsurv {

// Right-continuous piecewise-constant function: value_before_first on
// (-inf, jump_times[0]), values[k] on [jump_times[k], jump_times[k+1]).
struct StepFunction {
  std::vector<double> jump_times;
  std::vector<double> values;
  double value_before_first = 1.0;

  double operator()(double t) const;
  // Left limit: the value just before t.
  double eval_left(double t) const;

  std::string to_json() const;
  static StepFunction from_json(const std::string& text);
};

struct LogRankResult {
  double statistic = 0.0;
  bool degenerate = false;  // zero total variance
};

// Kaplan-Meier survival estimate.  Ties between events and censorings at the
// same time keep the censored subjects in the risk set for that time.
StepFunction kaplan_meier(const std::vector<double>& times, const std::vector<std::uint8_t>& status);

// Nelson-Aalen cumulative hazard, same tie rule.
StepFunction nelson_aalen(const std::vector<double>& times, const std::vector<std::uint8_t>& status);

// Signed standardized two-sample log-rank statistic with group 1 = left.
// Distinct times with one subject at risk add no variance and are skipped in
// the denominator.  Zero total variance yields statistic 0 with the flag set.
LogRankResult logrank_statistic(const std::vector<double>& left_times,
                                const std::vector<std::uint8_t>& left_status,
                                const std::vector<double>& right_times,
                                const std::vector<std::uint8_t>& right_status);

// Inverse-probability-of-censoring-weighted Brier score at time t.  The
// censoring distribution is the Kaplan-Meier fit with status flipped, floored
// at 0.05 wherever it divides.
double ipcw_brier(const std::vector<StepFunction>& predicted_sf, const std::vector<double>& times,
                  const std::vector<std::uint8_t>& status, double t);

}  // namespace fsurv
