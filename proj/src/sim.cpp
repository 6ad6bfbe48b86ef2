#include "fsurv/sim.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <json.hpp>

namespace fsurv {

std::vector<double> gp_noise(const std::vector<double>& times, double scale, double rate,
                             Rng& rng) {
  const std::size_t n = times.size();
  if (n == 0) return {};
  if (!std::is_sorted(times.begin(), times.end())) throw DataError("noise times must be sorted");
  Eigen::MatrixXd k(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      const double v = scale * std::exp(-rate * std::abs(times[a] - times[b]));
      k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
      k(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
  if (eig.info() != Eigen::Success) throw DataError("noise covariance decomposition failed");
  Eigen::VectorXd roots = eig.eigenvalues();
  for (Eigen::Index i = 0; i < roots.size(); ++i)
    roots(i) = std::sqrt(std::max(roots(i), 1e-10));
  const Eigen::MatrixXd sqrt_k =
      eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  const Eigen::VectorXd draw = sqrt_k * z;
  return {draw.data(), draw.data() + draw.size()};
}

std::vector<std::vector<double>> scalar_covariates(std::size_t n, Rng& rng) {
  std::vector<std::vector<double>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i] = {rng.bernoulli(0.5) ? 1.0 : 0.0, rng.bernoulli(0.5) ? 1.0 : 0.0, rng.normal(),
               rng.normal()};
  }
  return rows;
}

namespace {

constexpr double kPi = 3.14159265358979323846;

// Fixed-width ids keep lexicographic and generation order identical.
std::string subject_id(std::size_t index, std::size_t n) {
  const std::size_t width = std::max<std::size_t>(4, std::to_string(n).size());
  std::string digits = std::to_string(index + 1);
  while (digits.size() < width) digits.insert(digits.begin(), '0');
  return "subj" + digits;
}

std::vector<double> design_curve(const SimConfig& config, int group,
                                 const std::vector<double>& grid, Rng& rng) {
  std::vector<double> curve(grid.size());
  if (config.scenario == 'A') {
    double lo = config.group1_lo;
    double hi = config.group1_hi;
    if (group == 2) {
      const bool flag = rng.bernoulli(config.mix_prob);
      lo = flag ? config.regime1_lo : config.regime0_lo;
      hi = flag ? config.regime1_hi : config.regime0_hi;
    }
    const double a1 = rng.uniform(lo, hi);
    const double a2 = rng.uniform(lo, hi);
    const double span = config.window().length();
    for (std::size_t m = 0; m < grid.size(); ++m) {
      const double s = grid[m] / span;  // trig arguments on the unit interval
      curve[m] = a1 * std::sin(kPi * s) + a2 * std::cos(kPi * s);
    }
  } else {
    const double theta = group == 2 ? rng.uniform(config.theta_lo, config.theta_hi) : 0.0;
    for (std::size_t m = 0; m < grid.size(); ++m) {
      curve[m] = config.slope * grid[m];
      if (group == 2)
        curve[m] += config.amplitude * std::sin(config.rate * kPi * (grid[m] + theta));
    }
  }
  return curve;
}

}  // namespace

SimResult simulate(const SimConfig& config) {
  if (config.scenario != 'A' && config.scenario != 'B')
    throw DataError("scenario must be A or B");
  if (config.n < 2) throw DataError("simulation needs at least two subjects");
  if (!(config.event_fraction > 0.0 && config.event_fraction < 1.0))
    throw DataError("event fraction must lie strictly between 0 and 1");
  if (!(config.keep_probability > 0.0 && config.keep_probability <= 1.0))
    throw DataError("keep probability must lie in (0,1]");
  if (config.grid_size() < 6) throw DataError("grid too small for irregular subsampling");

  const Interval window = config.window();
  const std::size_t g = config.grid_size();
  std::vector<double> grid(g);
  for (std::size_t m = 0; m < g; ++m)
    grid[m] = window.lo + (window.hi - window.lo) * static_cast<double>(m) /
                              static_cast<double>(g - 1);
  const std::size_t n_events =
      static_cast<std::size_t>(std::llround(config.event_fraction * static_cast<double>(config.n)));

  SimResult result;
  result.truth.scenario = config.scenario;
  result.truth.seed = config.seed;
  result.truth.window = window;
  result.truth.grid = grid;
  result.data.window = window;

  Rng covariate_rng(derive_seed(config.seed, {2}));
  const std::vector<std::vector<double>> covariates = scalar_covariates(config.n, covariate_rng);

  const double half = window.lo + 0.5 * (window.hi - window.lo);
  for (std::size_t i = 0; i < config.n; ++i) {
    const int group = i < n_events ? 1 : 2;
    Rng rng(derive_seed(config.seed, {1, i}));

    std::vector<double> truth_curve = design_curve(config, group, grid, rng);
    const std::vector<double> wiggle = gp_noise(grid, config.gp_scale, config.gp_rate, rng);
    for (std::size_t m = 0; m < g; ++m) truth_curve[m] += wiggle[m];

    const double observed_time = rng.uniform(half, window.hi);
    std::vector<std::size_t> candidates;
    for (std::size_t m = 0; m < g; ++m)
      if (grid[m] <= observed_time) candidates.push_back(m);

    std::vector<std::size_t> kept;
    for (int attempt = 0; attempt < 1000 && kept.size() < 3; ++attempt) {
      kept.clear();
      for (std::size_t m : candidates)
        if (rng.bernoulli(config.keep_probability)) kept.push_back(m);
    }
    if (kept.size() < 3) kept.assign(candidates.begin(), candidates.begin() + 3);

    LongitudinalSample sample;
    sample.id = subject_id(i, config.n);
    const double sd = std::sqrt(config.obs_noise_variance);
    for (std::size_t m : kept) {
      sample.times.push_back(grid[m]);
      sample.values.push_back(truth_curve[m] + rng.normal(0.0, sd));
    }

    SurvivalRecord record;
    record.id = sample.id;
    record.event_time = observed_time;
    record.status = group == 1 ? 1 : 0;
    record.covariates = covariates[i];

    result.data.samples.push_back(std::move(sample));
    result.data.survival.push_back(std::move(record));
    result.truth.ids.push_back(subject_id(i, config.n));
    result.truth.group.push_back(group);
    result.truth.trajectories.push_back(std::move(truth_curve));
  }
  validate(result.data);
  return result;
}

std::string truth_to_json(const SimTruth& truth) {
  nlohmann::json subjects = nlohmann::json::array();
  for (std::size_t i = 0; i < truth.ids.size(); ++i) {
    subjects.push_back({{"id", truth.ids[i]},
                        {"group", truth.group[i]},
                        {"trajectory", truth.trajectories[i]}});
  }
  nlohmann::json doc{{"scenario", std::string(1, truth.scenario)},
                     {"seed", truth.seed},
                     {"window", {truth.window.lo, truth.window.hi}},
                     {"grid", truth.grid},
                     {"subjects", subjects}};
  return doc.dump();
}

SimTruth truth_from_json(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, true, false);
  if (!doc.is_object()) throw DataError("not a truth document");
  SimTruth truth;
  const std::string scenario = doc.at("scenario").get<std::string>();
  if (scenario.size() != 1) throw DataError("bad scenario tag");
  truth.scenario = scenario[0];
  truth.seed = doc.at("seed").get<std::uint64_t>();
  truth.window.lo = doc.at("window").at(0).get<double>();
  truth.window.hi = doc.at("window").at(1).get<double>();
  truth.grid = doc.at("grid").get<std::vector<double>>();
  for (const nlohmann::json& s : doc.at("subjects")) {
    truth.ids.push_back(s.at("id").get<std::string>());
    truth.group.push_back(s.at("group").get<int>());
    truth.trajectories.push_back(s.at("trajectory").get<std::vector<double>>());
  }
  return truth;
}

}  // namespace fsurv
