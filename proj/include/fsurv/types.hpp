#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsurv {

// Raised for malformed files, broken invariants, and numerically impossible
// requests.  The CLI maps it to a distinct exit code.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double t) const { return t >= lo && t <= hi; }
};

// Irregularly sampled trajectory of one subject.
struct LongitudinalSample {
  std::string id;
  std::vector<double> times;   // strictly increasing
  std::vector<double> values;  // same length as times
};

struct SurvivalRecord {
  std::string id;
  double event_time = 0.0;             // observed time T*, event or censoring
  std::uint8_t status = 0;             // 1 = event, 0 = censored
  std::vector<double> covariates;      // scalar covariates x_1..x_q, q >= 0
};

// Joined view used by every downstream stage.  samples[i] and survival[i]
// describe the same subject; subjects are sorted by id.
struct MixedSurvivalDataset {
  std::vector<LongitudinalSample> samples;
  std::vector<SurvivalRecord> survival;
  Interval window;

  std::size_t size() const { return survival.size(); }
  std::size_t n_covariates() const { return survival.empty() ? 0 : survival.front().covariates.size(); }
};

// Checks every dataset invariant; throws DataError naming the first offender.
void validate(const MixedSurvivalDataset& data);

}  // namespace fsurv
