#include "fsurv/survcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "fsurv/types.hpp"

namespace fsurv {

double StepFunction::operator()(double t) const {
  const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  if (it == jump_times.begin()) return value_before_first;
  return values[static_cast<std::size_t>(it - jump_times.begin()) - 1];
}

double StepFunction::eval_left(double t) const {
  const auto it = std::lower_bound(jump_times.begin(), jump_times.end(), t);
  if (it == jump_times.begin()) return value_before_first;
  return values[static_cast<std::size_t>(it - jump_times.begin()) - 1];
}

std::string StepFunction::to_json() const {
  nlohmann::json doc{{"t", jump_times}, {"v", values}, {"v0", value_before_first}};
  return doc.dump();
}

StepFunction StepFunction::from_json(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text);
  StepFunction f;
  f.jump_times = doc.at("t").get<std::vector<double>>();
  f.values = doc.at("v").get<std::vector<double>>();
  f.value_before_first = doc.at("v0").get<double>();
  return f;
}

namespace {

struct RiskWalk {
  std::vector<double> event_times;  // distinct times with >= 1 event
  std::vector<double> deaths;       // d_l
  std::vector<double> at_risk;      // r_l
};

// Distinct event times with death and risk-set counts.  Censored subjects
// tied with an event time count as at risk for it.
RiskWalk risk_walk(const std::vector<double>& times, const std::vector<std::uint8_t>& status) {
  if (times.empty()) throw DataError("survival estimate needs at least one subject");
  if (times.size() != status.size()) throw DataError("times/status length mismatch");
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (times[a] != times[b]) return times[a] < times[b];
    return status[a] > status[b];
  });
  RiskWalk walk;
  double at_risk = static_cast<double>(times.size());
  std::size_t k = 0;
  while (k < order.size()) {
    const double t = times[order[k]];
    double deaths = 0.0;
    double leaving = 0.0;
    while (k < order.size() && times[order[k]] == t) {
      deaths += status[order[k]] ? 1.0 : 0.0;
      leaving += 1.0;
      ++k;
    }
    if (deaths > 0.0) {
      walk.event_times.push_back(t);
      walk.deaths.push_back(deaths);
      walk.at_risk.push_back(at_risk);
    }
    at_risk -= leaving;
  }
  return walk;
}

}  // namespace

StepFunction kaplan_meier(const std::vector<double>& times, const std::vector<std::uint8_t>& status) {
  const RiskWalk walk = risk_walk(times, status);
  StepFunction sf;
  sf.value_before_first = 1.0;
  sf.jump_times = walk.event_times;
  sf.values.reserve(walk.event_times.size());
  double s = 1.0;
  for (std::size_t l = 0; l < walk.event_times.size(); ++l) {
    s *= 1.0 - walk.deaths[l] / walk.at_risk[l];
    sf.values.push_back(s);
  }
  return sf;
}

StepFunction nelson_aalen(const std::vector<double>& times, const std::vector<std::uint8_t>& status) {
  const RiskWalk walk = risk_walk(times, status);
  StepFunction chf;
  chf.value_before_first = 0.0;
  chf.jump_times = walk.event_times;
  chf.values.reserve(walk.event_times.size());
  double h = 0.0;
  for (std::size_t l = 0; l < walk.event_times.size(); ++l) {
    h += walk.deaths[l] / walk.at_risk[l];
    chf.values.push_back(h);
  }
  return chf;
}

LogRankResult logrank_statistic(const std::vector<double>& left_times,
                                const std::vector<std::uint8_t>& left_status,
                                const std::vector<double>& right_times,
                                const std::vector<std::uint8_t>& right_status) {
  if (left_times.empty() || right_times.empty())
    throw DataError("log-rank needs a nonempty subject set on each side");
  std::vector<double> times(left_times);
  times.insert(times.end(), right_times.begin(), right_times.end());
  std::vector<std::uint8_t> status(left_status);
  status.insert(status.end(), right_status.begin(), right_status.end());
  const std::size_t n_left = left_times.size();

  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (times[a] != times[b]) return times[a] < times[b];
    return status[a] > status[b];
  });

  double numerator = 0.0;
  double variance = 0.0;
  bool any_event = false;
  double at_risk = static_cast<double>(times.size());
  double at_risk_left = static_cast<double>(n_left);
  std::size_t k = 0;
  while (k < order.size()) {
    const double t = times[order[k]];
    double deaths = 0.0, deaths_left = 0.0, leaving = 0.0, leaving_left = 0.0;
    while (k < order.size() && times[order[k]] == t) {
      const bool is_left = order[k] < n_left;
      if (status[order[k]]) {
        deaths += 1.0;
        if (is_left) deaths_left += 1.0;
      }
      leaving += 1.0;
      if (is_left) leaving_left += 1.0;
      ++k;
    }
    if (deaths > 0.0) {
      any_event = true;
      const double frac_left = at_risk_left / at_risk;
      numerator += deaths_left - frac_left * deaths;
      if (at_risk > 1.0)
        variance += frac_left * (1.0 - frac_left) * ((at_risk - deaths) / (at_risk - 1.0)) * deaths;
    }
    at_risk -= leaving;
    at_risk_left -= leaving_left;
  }
  if (!any_event) throw DataError("log-rank needs at least one event");
  if (variance <= 0.0) return {0.0, true};
  return {numerator / std::sqrt(variance), false};
}

double ipcw_brier(const std::vector<StepFunction>& predicted_sf, const std::vector<double>& times,
                  const std::vector<std::uint8_t>& status, double t) {
  if (times.empty()) throw DataError("Brier score needs at least one subject");
  if (predicted_sf.size() != times.size() || status.size() != times.size())
    throw DataError("Brier score inputs have mismatched lengths");
  const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
  if (t < *lo || t > *hi)
    throw DataError("Brier evaluation time outside the observed time range");

  std::vector<std::uint8_t> flipped(status.size());
  for (std::size_t i = 0; i < status.size(); ++i) flipped[i] = status[i] ? 0 : 1;
  const StepFunction censor_km = kaplan_meier(times, flipped);
  const double g_at_t = std::max(censor_km(t), 0.05);

  double total = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    double weight = 0.0;
    if (times[i] <= t && status[i])
      weight = 1.0 / std::max(censor_km.eval_left(times[i]), 0.05);
    else if (times[i] > t)
      weight = 1.0 / g_at_t;
    if (weight == 0.0) continue;
    const double outcome = times[i] > t ? 1.0 : 0.0;
    const double diff = outcome - predicted_sf[i](t);
    total += weight * diff * diff;
  }
  return total / static_cast<double>(times.size());
}

}  // namespace fsurv
