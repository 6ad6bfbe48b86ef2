#pragma once

#include <string>
#include <vector>

#include "fsurv/types.hpp"

namespace fsurv {

// CSV loaders.  Formats: longitudinal "id,time,value", survival
// "id,time,status,x1..xq" (q >= 0).  Rejections name the offending row.
std::vector<LongitudinalSample> load_longitudinal(const std::string& path);
std::vector<SurvivalRecord> load_survival(const std::string& path);

std::vector<LongitudinalSample> parse_longitudinal_csv(const std::string& text);
std::vector<SurvivalRecord> parse_survival_csv(const std::string& text);

void write_longitudinal(const std::string& path, const std::vector<LongitudinalSample>& samples);
void write_survival(const std::string& path, const std::vector<SurvivalRecord>& records);

// Pairs the two tables by id and sorts subjects by id, so the result does not
// depend on input row order.  Observations after the event time are kept.
MixedSurvivalDataset join(std::vector<LongitudinalSample> samples,
                          std::vector<SurvivalRecord> records, Interval window);

// Window spanning all observation and event times, for callers that have no
// externally declared study window.
Interval infer_window(const std::vector<LongitudinalSample>& samples,
                      const std::vector<SurvivalRecord>& records);

std::string dataset_to_json(const MixedSurvivalDataset& data);
MixedSurvivalDataset dataset_from_json(const std::string& text);

}  // namespace fsurv
