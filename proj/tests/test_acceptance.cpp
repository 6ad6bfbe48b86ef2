// Acceptance gate: ten end-to-end behavioral criteria, one pass/fail line
// each.  Tolerances and runtime caps are pinned next to each check.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fsurv/dataio.hpp"
#include "fsurv/discrimination.hpp"
#include "fsurv/forest.hpp"
#include "fsurv/fpca.hpp"
#include "fsurv/pfi.hpp"
#include "fsurv/rng.hpp"
#include "fsurv/sim.hpp"
#include "fsurv/smoothfn.hpp"
#include "fsurv/survcore.hpp"
#include "fsurv/survshap.hpp"
#include "fsurv/tree.hpp"
#include "fsurv/types.hpp"
#include "helpers.hpp"

using namespace fsurv;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// ------------------------------------------------- 1. survival primitives

struct ToySurvival {
  std::vector<double> times;
  std::vector<std::uint8_t> status;
};

std::vector<double> distinct_event_times(const ToySurvival& a, const ToySurvival* b = nullptr) {
  std::vector<double> t;
  for (std::size_t i = 0; i < a.times.size(); ++i)
    if (a.status[i]) t.push_back(a.times[i]);
  if (b)
    for (std::size_t i = 0; i < b->times.size(); ++i)
      if (b->status[i]) t.push_back(b->times[i]);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

double brute_km(const ToySurvival& d, double t) {
  double s = 1.0;
  for (double tl : distinct_event_times(d)) {
    if (tl > t) break;
    double events = 0.0, at_risk = 0.0;
    for (std::size_t i = 0; i < d.times.size(); ++i) {
      if (d.times[i] == tl && d.status[i]) events += 1.0;
      if (d.times[i] >= tl) at_risk += 1.0;
    }
    s *= 1.0 - events / at_risk;
  }
  return s;
}

double brute_na(const ToySurvival& d, double t) {
  double h = 0.0;
  for (double tl : distinct_event_times(d)) {
    if (tl > t) break;
    double events = 0.0, at_risk = 0.0;
    for (std::size_t i = 0; i < d.times.size(); ++i) {
      if (d.times[i] == tl && d.status[i]) events += 1.0;
      if (d.times[i] >= tl) at_risk += 1.0;
    }
    h += events / at_risk;
  }
  return h;
}

double brute_logrank(const ToySurvival& g1, const ToySurvival& g2) {
  double observed = 0.0, expected = 0.0, variance = 0.0;
  for (double tl : distinct_event_times(g1, &g2)) {
    double d1 = 0.0, r1 = 0.0, d2 = 0.0, r2 = 0.0;
    for (std::size_t i = 0; i < g1.times.size(); ++i) {
      if (g1.times[i] == tl && g1.status[i]) d1 += 1.0;
      if (g1.times[i] >= tl) r1 += 1.0;
    }
    for (std::size_t i = 0; i < g2.times.size(); ++i) {
      if (g2.times[i] == tl && g2.status[i]) d2 += 1.0;
      if (g2.times[i] >= tl) r2 += 1.0;
    }
    const double d = d1 + d2, r = r1 + r2;
    observed += d1;
    expected += d * r1 / r;
    if (r > 1.0) variance += d * (r1 / r) * (1.0 - r1 / r) * (r - d) / (r - 1.0);
  }
  return variance > 0.0 ? (observed - expected) / std::sqrt(variance) : 0.0;
}

Outcome criterion_survival_primitives() {
  Outcome out;
  const std::vector<ToySurvival> sets = {
      {{2, 3, 4, 4, 5, 7}, {1, 0, 1, 1, 0, 1}},
      {{1, 1, 2, 3, 3}, {1, 0, 1, 1, 0}},
      {{5, 6, 7, 8}, {0, 0, 0, 1}},
      {{1, 2, 3, 4, 5, 6}, {1, 1, 1, 1, 1, 1}},
      {{2, 2, 2, 3, 9, 9}, {1, 0, 1, 0, 1, 0}},
  };
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const ToySurvival& d = sets[k];
    const StepFunction km = kaplan_meier(d.times, d.status);
    const StepFunction na = nelson_aalen(d.times, d.status);
    std::vector<double> probes;
    for (double t : d.times) {
      probes.push_back(t - 0.5);
      probes.push_back(t);
      probes.push_back(t + 0.25);
    }
    probes.push_back(1e6);
    for (double t : probes) {
      out.expect(std::abs(km(t) - brute_km(d, t)) <= 1e-12,
                 "KM mismatch on dataset " + std::to_string(k) + " at t=" + fmt(t));
      out.expect(std::abs(na(t) - brute_na(d, t)) <= 1e-12,
                 "NA mismatch on dataset " + std::to_string(k) + " at t=" + fmt(t));
    }
  }
  const std::size_t pairs[5][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}};
  for (const auto& pr : pairs) {
    const ToySurvival& a = sets[pr[0]];
    const ToySurvival& b = sets[pr[1]];
    const LogRankResult lr = logrank_statistic(a.times, a.status, b.times, b.status);
    out.expect(std::abs(lr.statistic - brute_logrank(a, b)) <= 1e-12,
               "log-rank mismatch on pair (" + std::to_string(pr[0]) + "," +
                   std::to_string(pr[1]) + ")");
  }
  const ToySurvival& same = sets[0];
  const LogRankResult self = logrank_statistic(same.times, same.status, same.times, same.status);
  out.expect(self.statistic == 0.0, "identical-groups log-rank is not exactly zero");
  return out;
}

// ------------------------------------------------------ 2. basis recovery

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = testutil::mean_of(a), mb = testutil::mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

Outcome criterion_basis_recovery() {
  Outcome out;
  const std::size_t n = 100, g = 41;
  const std::vector<double> grid = testutil::linspace(0.0, 1.0, g);
  std::vector<std::vector<double>> raw(2, std::vector<double>(g));
  for (std::size_t k = 0; k < g; ++k) {
    raw[0][k] = std::sin(2.0 * M_PI * grid[k]);
    raw[1][k] = std::cos(2.0 * M_PI * grid[k]);
  }
  const std::vector<std::vector<double>> xi = testutil::orthonormalize(grid, raw);

  // Component scores with exact sample moments: mean zero, variances 9 and 4,
  // zero cross-correlation, so recovery error reflects estimation alone.
  Rng rng(424242);
  std::vector<double> s1(n), s2(n);
  for (std::size_t i = 0; i < n; ++i) {
    s1[i] = rng.normal();
    s2[i] = rng.normal();
  }
  const double m1 = testutil::mean_of(s1);
  for (double& v : s1) v -= m1;
  const double m2 = testutil::mean_of(s2);
  for (double& v : s2) v -= m2;
  double cross = 0.0, norm1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cross += s1[i] * s2[i];
    norm1 += s1[i] * s1[i];
  }
  for (std::size_t i = 0; i < n; ++i) s2[i] -= cross / norm1 * s1[i];
  double v1 = 0.0, v2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    v1 += s1[i] * s1[i];
    v2 += s2[i] * s2[i];
  }
  for (double& v : s1) v *= 3.0 / std::sqrt(v1 / static_cast<double>(n));
  for (double& v : s2) v *= 2.0 / std::sqrt(v2 / static_cast<double>(n));

  std::vector<LongitudinalSample> samples(n);
  std::vector<std::vector<double>> truth(n, std::vector<double>(g));
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "d%03zu", i + 1);
    samples[i].id = id;
    samples[i].times = grid;
    samples[i].values.resize(g);
    for (std::size_t k = 0; k < g; ++k) {
      truth[i][k] = 1.0 + grid[k] + s1[i] * xi[0][k] + s2[i] * xi[1][k];
      samples[i].values[k] = truth[i][k];
      lo = std::min(lo, truth[i][k]);
      hi = std::max(hi, truth[i][k]);
    }
  }

  const Interval window{0.0, 1.0};
  const MeanFunction mean = estimate_mean(samples, window, 0.1, g);
  const CovarianceEstimate cov = estimate_covariance(samples, mean, 0.04);
  const FunctionalBasis basis = eigendecompose(cov, mean, 2);
  out.expect(basis.n_components() == 2, "expected two recovered components");
  if (!out.ok) return out;
  out.expect(std::abs(basis.eigenvalues[0] - 9.0) <= 0.05 * 9.0,
             "first eigenvalue " + fmt(basis.eigenvalues[0]) + " beyond 5% of 9");
  out.expect(std::abs(basis.eigenvalues[1] - 4.0) <= 0.05 * 4.0,
             "second eigenvalue " + fmt(basis.eigenvalues[1]) + " beyond 5% of 4");

  const ScoreMatrix scores = pace_scores(samples, basis);
  std::vector<double> c1(n), c2(n);
  for (std::size_t i = 0; i < n; ++i) {
    c1[i] = scores.at(i, 0);
    c2[i] = scores.at(i, 1);
  }
  out.expect(std::abs(correlation(c1, s1)) > 0.99,
             "component-1 score correlation " + fmt(correlation(c1, s1)));
  out.expect(std::abs(correlation(c2, s2)) > 0.99,
             "component-2 score correlation " + fmt(correlation(c2, s2)));

  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> rec = reconstruct({scores.at(i, 0), scores.at(i, 1)}, basis);
    for (std::size_t k = 0; k < g; ++k) sq += (rec[k] - truth[i][k]) * (rec[k] - truth[i][k]);
  }
  const double rmse = std::sqrt(sq / static_cast<double>(n * g));
  out.expect(rmse < 0.02 * (hi - lo),
             "reconstruction RMSE " + fmt(rmse) + " vs range " + fmt(hi - lo));
  return out;
}

// -------------------------------------------------- 3. contribution axioms

struct ToyForest {
  testutil::ScalarDesign design;
  Forest model;
};

ToyForest toy_forest(std::uint64_t seed, std::size_t n, std::size_t n_trees) {
  Rng rng(seed);
  std::vector<std::vector<double>> columns(6, std::vector<double>(n));
  for (std::size_t j = 0; j < 5; ++j)
    for (std::size_t i = 0; i < n; ++i) columns[j][i] = rng.normal();
  for (std::size_t i = 0; i < n; ++i) columns[5][i] = 3.0;  // constant: a null player
  std::vector<double> times(n);
  std::vector<std::uint8_t> status(n);
  for (std::size_t i = 0; i < n; ++i) {
    times[i] = columns[0][i] > 0.0 ? rng.uniform(6.0, 9.0) : rng.uniform(1.0, 4.0);
    status[i] = rng.bernoulli(0.8) ? 1 : 0;
  }
  status[0] = 1;
  ToyForest out{testutil::scalar_design(columns, times, status), {}};
  ForestConfig config;
  config.n_trees = n_trees;
  config.tree.min_node_size = 4;
  out.model = grow_forest(out.design.data, out.design.features, config, seed);
  return out;
}

Outcome criterion_contribution_axioms() {
  Outcome out;
  const ToyForest toy = toy_forest(7, 25, 12);
  const FeatureMatrix& features = toy.design.features;
  std::vector<double> w(features.cols);
  for (std::size_t j = 0; j < features.cols; ++j) w[j] = features.at(4, j);
  const auto background = background_rows(features, 10);
  const std::vector<double>& grid = toy.model.event_grid;

  const ShapMatrix exact = survshap_exact(toy.model, w, background, grid);
  const StepFunction sf = predict_forest(toy.model, w).second;
  const std::vector<double> shat = eval_on_grid(sf, grid);
  for (std::size_t m = 0; m < grid.size(); ++m) {
    double sum = 0.0;
    for (std::size_t j = 0; j < features.cols; ++j) sum += exact.phi_at(m, j);
    out.expect(std::abs(sum - (shat[m] - exact.baseline[m])) <= 1e-6,
               "efficiency violated at t=" + fmt(grid[m]));
    out.expect(std::abs(exact.phi_at(m, 5)) <= 1e-10,
               "null-player contribution " + fmt(exact.phi_at(m, 5)));
  }

  Rng rng(derive_seed(7, {3}));
  const std::size_t full_budget = (std::size_t{1} << features.cols) - 2;
  const ShapMatrix kernel = survshap_kernel(toy.model, w, background, grid, full_budget, rng);
  for (std::size_t m = 0; m < grid.size(); ++m)
    for (std::size_t j = 0; j < features.cols; ++j)
      out.expect(std::abs(kernel.phi_at(m, j) - exact.phi_at(m, j)) <= 1e-10,
                 "full-enumeration kernel deviates at t=" + fmt(grid[m]) + " feature " +
                     std::to_string(j));
  return out;
}

// ------------------------------------------------------- 4. rate identities

Outcome criterion_rate_identities() {
  Outcome out;
  const ToyForest toy = toy_forest(4, 40, 20);
  const FeatureMatrix& features = toy.design.features;
  const std::vector<double>& grid = toy.model.event_grid;
  std::vector<Interval> intervals = event_free_intervals(grid);
  if (intervals.size() > 5) intervals.resize(5);
  out.expect(!intervals.empty(), "no event-free intervals in the toy fixture");
  if (!out.ok) return out;

  std::vector<double> w(features.cols);
  for (std::size_t j = 0; j < features.cols; ++j) w[j] = features.at(1, j);
  const ShapMatrix shap = survshap_exact(toy.model, w, background_rows(features, 8), grid);
  for (std::size_t j = 0; j < features.cols; ++j)
    for (const Interval& interval : intervals) {
      const ContributionSummary row = shap_summary(shap, j, interval);
      out.expect(std::abs(row.tnsd * interval.length() - row.tsd) <=
                     1e-12 * std::max(1.0, std::abs(row.tsd)),
                 "TNSD rate identity broken for feature " + std::to_string(j));
    }
  for (std::size_t j = 0; j < features.cols; ++j) {
    const ImportanceCurve curve =
        averaged_importance(toy.model, toy.design.data, features, j, 2, 11);
    for (const Interval& interval : intervals) {
      const ImportanceSummary row = importance_summary(curve, interval);
      out.expect(std::abs(row.mtngd * interval.length() - row.mtgd) <=
                     1e-12 * std::max(1.0, std::abs(row.mtgd)),
                 "MTNGD rate identity broken for feature " + std::to_string(j));
    }
  }

  // Regression pins: two published-style consistent rows where the rate is the
  // interval mean of the gap.  The companion local row with ratio = 3.27 over a
  // length-2 interval contradicts the identity and is deliberately not pinned.
  out.expect(std::abs(-5.38e-6 / 2.0 - (-2.69e-6)) <= 5e-9 * 2.69,
             "pinned global row [4,6] fails the rate identity");
  out.expect(std::abs(7.02e-6 / 2.0 - 3.51e-6) <= 5e-9 * 3.51,
             "pinned global row [22,24] fails the rate identity");
  return out;
}

// -------------------------------------------------------- 5. smoother limits

Outcome criterion_smoother_limits() {
  Outcome out;
  const std::vector<double> times = {0.0,  0.4,  0.9,  1.7,  2.2,  3.0,
                                     3.35, 4.1,  4.8,  5.5,  6.25, 7.0};
  std::vector<double> affine(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) affine[k] = 3.0 - 2.0 * times[k];
  for (double lambda : {0.0, 1e-3, 1.0, 1e6, 1e12}) {
    const SmoothCurve fit = fit_penalized(times, affine, lambda);
    for (std::size_t k = 0; k < times.size(); ++k)
      out.expect(std::abs(fit(times[k]) - affine[k]) <= 1e-9,
                 "affine data not reproduced at lambda=" + fmt(lambda));
    out.expect(std::abs(fit(2.6) - (3.0 - 2.0 * 2.6)) <= 1e-9, "affine fit off between knots");
  }

  Rng rng(99);
  std::vector<double> wiggly(times.size());
  for (double& v : wiggly) v = rng.normal(0.0, 2.0);
  const SmoothCurve interp = fit_penalized(times, wiggly, 0.0);
  for (std::size_t k = 0; k < times.size(); ++k)
    out.expect(std::abs(interp(times[k]) - wiggly[k]) <= 1e-9, "lambda=0 does not interpolate");

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    sx += times[k];
    sy += wiggly[k];
    sxx += times[k] * times[k];
    sxy += times[k] * wiggly[k];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  const SmoothCurve flat = fit_penalized(times, wiggly, 1e12);
  for (double t : {0.0, 1.3, 3.7, 7.0})
    out.expect(std::abs(flat(t) - (intercept + slope * t)) <= 1e-6,
               "heavy penalty does not reach the least-squares line at t=" + fmt(t));

  const SmoothCurve curve = fit_penalized(times, wiggly, 0.5);
  for (double mid : {0.7, 2.0, 4.35, 6.0}) {
    const double whole = integrate(curve, times.front(), times.back());
    const double split = integrate(curve, times.front(), mid) +
                         integrate(curve, mid, times.back());
    out.expect(std::abs(whole - split) <= 1e-12, "integral additivity broken at c=" + fmt(mid));
  }
  return out;
}

// ----------------------------------------------------- 6. curve metric axioms

Outcome criterion_metric_axioms() {
  Outcome out;
  const std::vector<double> grid = testutil::linspace(0.0, 2.0, 31);
  Rng rng(314);
  auto random_curve = [&] {
    DiscriminationCurve c;
    c.grid = grid;
    c.values.resize(grid.size());
    double level = rng.normal(0.0, 1.0);
    for (double& v : c.values) {
      level += rng.normal(0.0, 0.3);
      v = level;
    }
    return c;
  };
  for (int rep = 0; rep < 1000; ++rep) {
    const DiscriminationCurve a = random_curve(), b = random_curve(), c = random_curve();
    out.expect(l2_distance(a, a) == 0.0, "identity is not exact");
    out.expect(l2_distance(a, b) == l2_distance(b, a), "symmetry is not exact");
    out.expect(l2_distance(a, c) <= l2_distance(a, b) + l2_distance(b, c) + 1e-9,
               "triangle inequality violated");
  }
  const DiscriminationCurve base = random_curve();
  DiscriminationCurve shifted = base;
  for (double& v : shifted.values) v += 0.7;
  out.expect(std::abs(l2_distance(base, shifted) - 0.7 * std::sqrt(2.0)) <= 1e-10,
             "constant-offset closed form off: " + fmt(l2_distance(base, shifted)));
  return out;
}

// --------------------------------------------------------- 7. forest behavior

Outcome criterion_forest_behavior() {
  Outcome out;
  double oob_sum = 0.0;
  std::size_t oob_trees = 0, fpc_majority_runs = 0, brier_hits = 0;
  Forest kept_forest;
  FeatureMatrix kept_features;

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SimConfig config;
    config.scenario = 'A';
    config.n = 200;
    config.seed = seed;
    const SimResult sim = simulate(config);
    const Interval window = sim.data.window;

    const MeanFunction mean =
        estimate_mean(sim.data.samples, window, window.length() / 10.0, 41);
    const CovarianceEstimate cov =
        estimate_covariance(sim.data.samples, mean, window.length() / 5.0);
    const FunctionalBasis basis = eigendecompose(cov, mean, 5);
    const ScoreMatrix scores = pace_scores(sim.data.samples, basis);
    const FeatureMatrix features = make_features(sim.data, scores);

    ForestConfig config_f;
    config_f.n_trees = 200;
    const Forest forest = grow_forest(sim.data, features, config_f, seed);

    std::size_t fpc_roots = 0;
    for (std::size_t b = 0; b < forest.trees.size(); ++b) {
      oob_sum += static_cast<double>(forest.oob[b].size()) / static_cast<double>(config.n);
      ++oob_trees;
      const TreeNode& root = forest.trees[b].root();
      if (!root.is_terminal && features.kinds[root.split.column] == ColumnKind::fpc_score)
        ++fpc_roots;
    }
    if (2 * fpc_roots > forest.trees.size()) ++fpc_majority_runs;

    std::vector<bool> seen(config.n, false);
    for (const auto& rows : forest.oob)
      for (std::size_t i : rows) seen[i] = true;
    std::vector<StepFunction> oob_sf;
    std::vector<double> times;
    std::vector<std::uint8_t> status;
    for (std::size_t i = 0; i < config.n; ++i) {
      if (!seen[i]) continue;
      std::vector<double> w(features.cols);
      for (std::size_t j = 0; j < features.cols; ++j) w[j] = features.at(i, j);
      oob_sf.push_back(oob_ensemble_sf(forest, i, w));
      times.push_back(sim.data.survival[i].event_time);
      status.push_back(sim.data.survival[i].status);
    }
    const std::vector<double>& grid = forest.event_grid;
    double integral = 0.0;
    double prev_t = grid.front();
    double prev_v = ipcw_brier(oob_sf, times, status, prev_t);
    for (std::size_t m = 1; m < grid.size(); ++m) {
      const double v = ipcw_brier(oob_sf, times, status, grid[m]);
      integral += 0.5 * (v + prev_v) * (grid[m] - prev_t);
      prev_t = grid[m];
      prev_v = v;
    }
    const double integrated = integral / (grid.back() - grid.front());
    if (integrated < 0.25) ++brier_hits;

    if (seed == 1) {
      kept_forest = forest;
      kept_features = features;
    }
  }

  const double oob_mean = oob_sum / static_cast<double>(oob_trees);
  out.expect(oob_mean >= 0.34 && oob_mean <= 0.40, "mean OOB fraction " + fmt(oob_mean));
  out.expect(brier_hits >= 9,
             "integrated OOB Brier beats 0.25 in only " + std::to_string(brier_hits) + "/10");
  out.expect(fpc_majority_runs >= 8, "FPC-rooted majority in only " +
                                         std::to_string(fpc_majority_runs) + "/10 runs");

  std::vector<double> col_lo(kept_features.cols, 1e300), col_hi(kept_features.cols, -1e300);
  for (std::size_t i = 0; i < kept_features.rows; ++i)
    for (std::size_t j = 0; j < kept_features.cols; ++j) {
      col_lo[j] = std::min(col_lo[j], kept_features.at(i, j));
      col_hi[j] = std::max(col_hi[j], kept_features.at(i, j));
    }
  Rng rng(555);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> w(kept_features.cols);
    for (std::size_t j = 0; j < kept_features.cols; ++j)
      w[j] = rng.uniform(col_lo[j], col_hi[j]);
    const auto [chf, sf] = predict_forest(kept_forest, w);
    out.expect(sf.value_before_first == 1.0, "SF does not start at 1");
    double prev = sf.value_before_first;
    for (double v : sf.values) {
      out.expect(v >= 0.0 && v <= 1.0, "SF outside [0,1]");
      out.expect(v <= prev + 1e-12, "SF increases over time");
      prev = v;
    }
    prev = chf.value_before_first;
    for (double v : chf.values) {
      out.expect(v >= prev - 1e-12, "CHF decreases over time");
      prev = v;
    }
  }
  return out;
}

// ------------------------------------------------- 8. importance detection

Outcome criterion_importance_detection() {
  Outcome out;
  std::size_t first_hits = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(900 + seed);
    const std::size_t n = 60;
    std::vector<std::vector<double>> columns(8, std::vector<double>(n));
    for (std::size_t j = 0; j < 7; ++j)
      for (std::size_t i = 0; i < n; ++i) columns[j][i] = rng.normal();
    for (std::size_t i = 0; i < n; ++i) columns[7][i] = 0.0;  // never splittable
    std::vector<double> times(n);
    std::vector<std::uint8_t> status(n);
    for (std::size_t i = 0; i < n; ++i) {
      times[i] = columns[0][i] > 0.0 ? rng.uniform(8.0, 10.0) : rng.uniform(1.0, 3.0);
      status[i] = rng.bernoulli(0.9) ? 1 : 0;
    }
    status[0] = 1;
    const testutil::ScalarDesign design = testutil::scalar_design(columns, times, status);
    ForestConfig config;
    config.n_trees = 25;
    const Forest model = grow_forest(design.data, design.features, config, seed);

    const auto ranking = rank_features(model, design.data, design.features, 3, seed);
    if (ranking.front().feature == 0) ++first_hits;

    const ImportanceCurve unused =
        averaged_importance(model, design.data, design.features, 7, 3, seed);
    for (double v : unused.raw)
      out.expect(v == 0.0, "unused-column importance " + fmt(v) + " is not exactly zero");
  }
  out.expect(first_hits >= 9,
             "planted feature ranked first in only " + std::to_string(first_hits) + "/10");
  return out;
}

// --------------------------------------------- 9. discrimination structure

Tree manual_stump(bool fpc_split, double threshold) {
  Tree tree;
  TreeNode root;
  root.id = 0;
  root.depth = 0;
  root.membership = {0, 1, 2, 3, 4, 5};
  root.is_terminal = false;
  root.split = {0, threshold, 3.0, 0.01};
  root.left = 1;
  root.right = 2;
  TreeNode left;
  left.id = 1;
  left.depth = 1;
  left.membership = fpc_split ? std::vector<std::size_t>{0, 1, 2, 3}
                              : std::vector<std::size_t>{0, 1, 2};
  TreeNode right;
  right.id = 2;
  right.depth = 1;
  right.membership = fpc_split ? std::vector<std::size_t>{4, 5}
                               : std::vector<std::size_t>{3, 4, 5};
  tree.nodes = {root, left, right};
  return tree;
}

Outcome criterion_discrimination_structure() {
  Outcome out;
  const std::vector<double> grid = testutil::linspace(0.0, 1.0, 21);
  std::vector<double> mean_values(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) mean_values[k] = 2.0 + grid[k];
  const FunctionalBasis unit = testutil::analytic_basis(
      grid, mean_values, {std::vector<double>(grid.size(), 1.0)}, {2.0});
  const ScoreMatrix scores = testutil::make_scores(6, 1, {-2.0, -1.0, -1.5, -0.5, 3.0, 4.0});

  FeatureMatrix fpc_features;
  fpc_features.rows = 6;
  fpc_features.cols = 1;
  fpc_features.data = scores.data;
  fpc_features.kinds = {ColumnKind::fpc_score};
  fpc_features.components = {1};
  fpc_features.names = {"pc1"};

  FeatureMatrix scalar_features = fpc_features;
  scalar_features.kinds = {ColumnKind::scalar};
  scalar_features.components = {0};
  scalar_features.names = {"x1"};

  // Scalar-only paths leave the curve at the local mean.
  const Tree scalar_tree = manual_stump(false, -1.2);
  for (int id : {0, 1, 2}) {
    const DiscriminationCurve curve = lfsdc(scalar_tree, id, scalar_features, scores, unit);
    const std::vector<double> lm =
        local_mean(scalar_tree.node(id).membership, scores, unit);
    for (std::size_t k = 0; k < grid.size(); ++k)
      out.expect(std::abs(curve.values[k] - lm[k]) <= 1e-12,
                 "scalar-path curve leaves the local mean at node " + std::to_string(id));
    out.expect(curve.contributing_nodes.empty(), "scalar split recorded as a contribution");
  }

  // Doubling every threshold on the path doubles the offset from the mean.
  const Tree tree_tau = manual_stump(true, 0.25);
  const Tree tree_2tau = manual_stump(true, 0.5);
  for (int id : {0, 1, 2}) {
    const std::vector<double> lm = local_mean(tree_tau.node(id).membership, scores, unit);
    const DiscriminationCurve one = lfsdc(tree_tau, id, fpc_features, scores, unit);
    const DiscriminationCurve two = lfsdc(tree_2tau, id, fpc_features, scores, unit);
    for (std::size_t k = 0; k < grid.size(); ++k)
      out.expect(std::abs((two.values[k] - lm[k]) - 2.0 * (one.values[k] - lm[k])) <= 1e-12,
                 "offset does not double at node " + std::to_string(id));
  }

  // Terminal memberships partition the root and survive the JSON round trip.
  Rng rng(5);
  const std::size_t n = 24;
  std::vector<std::vector<double>> columns(1, std::vector<double>(n));
  std::vector<double> entries(n * 2);
  std::vector<double> times(n);
  std::vector<std::uint8_t> status(n);
  for (std::size_t i = 0; i < n; ++i) {
    columns[0][i] = rng.normal();
    entries[i * 2] = rng.normal(0.0, 2.0);
    entries[i * 2 + 1] = rng.normal();
    times[i] = entries[i * 2] > 0.0 ? rng.uniform(5.0, 8.0) : rng.uniform(1.0, 3.0);
    status[i] = rng.bernoulli(0.85) ? 1 : 0;
  }
  status[0] = 1;
  testutil::ScalarDesign design = testutil::scalar_design(columns, times, status);
  const ScoreMatrix grown_scores = testutil::make_scores(n, 2, entries);
  const FeatureMatrix grown_features = make_features(design.data, grown_scores);
  const FunctionalBasis basis = testutil::analytic_basis(
      grid, mean_values,
      {std::vector<double>(grid.size(), 1.0),
       [&] {
         std::vector<double> second(grid.size());
         for (std::size_t k = 0; k < grid.size(); ++k) second[k] = grid[k] - 0.5;
         return second;
       }()},
      {2.0, 1.0});
  TreeConfig tree_config;
  tree_config.max_depth = 3;
  Rng grow_rng(17);
  const Tree grown = grow_tree(design.data, grown_features, tree_config, grow_rng);

  std::vector<std::size_t> covered;
  for (const TreeNode& node : grown.nodes)
    if (node.is_terminal)
      covered.insert(covered.end(), node.membership.begin(), node.membership.end());
  std::sort(covered.begin(), covered.end());
  std::vector<std::size_t> expected(n);
  for (std::size_t i = 0; i < n; ++i) expected[i] = i;
  out.expect(covered == expected, "terminal memberships do not partition the root");

  const TreeDocument doc = annotate_tree(grown, grown_features, grown_scores, basis);
  const std::string text = tree_document_to_json(doc);
  const TreeDocument back = tree_document_from_json(text);
  out.expect(tree_document_to_json(back) == text, "tree document round trip not byte-stable");
  out.expect(back.tree.nodes.size() == grown.nodes.size(), "node count changed in round trip");
  for (std::size_t k = 0; k < grown.nodes.size(); ++k) {
    out.expect(back.tree.nodes[k].membership == grown.nodes[k].membership,
               "membership changed in round trip at node " + std::to_string(k));
    out.expect(back.payloads[k].lfsdc == doc.payloads[k].lfsdc,
               "curve payload changed in round trip at node " + std::to_string(k));
  }
  return out;
}

// --------------------------------------------------- 10. pipeline determinism

void run_pipeline(const std::string& dir) {
  SimConfig config;
  config.scenario = 'A';
  config.n = 60;
  config.seed = 5;
  const SimResult sim = simulate(config);
  write_longitudinal(dir + "/longitudinal.csv", sim.data.samples);
  write_survival(dir + "/survival.csv", sim.data.survival);
  std::ofstream(dir + "/truth.json", std::ios::binary) << truth_to_json(sim.truth);

  auto samples = load_longitudinal(dir + "/longitudinal.csv");
  auto records = load_survival(dir + "/survival.csv");
  const Interval window = infer_window(samples, records);
  const MixedSurvivalDataset data = join(std::move(samples), std::move(records), window);

  const MeanFunction mean =
      estimate_mean(data.samples, data.window, data.window.length() / 10.0, 41);
  const CovarianceEstimate cov =
      estimate_covariance(data.samples, mean, data.window.length() / 5.0);
  const FunctionalBasis basis = eigendecompose(cov, mean, 3);
  const ScoreMatrix scores = pace_scores(data.samples, basis);
  std::ofstream(dir + "/basis.json", std::ios::binary) << basis_to_json(basis);
  std::vector<std::string> ids;
  for (const auto& record : data.survival) ids.push_back(record.id);
  write_scores(dir + "/scores.csv", ids, scores);

  const FeatureMatrix features = make_features(data, scores);
  ForestConfig forest_config;
  forest_config.n_trees = 40;
  const Forest forest = grow_forest(data, features, forest_config, 9);
  save_forest(dir + "/forest.jsonl", forest);

  std::vector<StepFunction> chf(data.size()), sf(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<double> w(features.cols);
    for (std::size_t j = 0; j < features.cols; ++j) w[j] = features.at(i, j);
    std::tie(chf[i], sf[i]) = predict_forest(forest, w);
  }
  write_predictions(dir + "/predictions.csv", ids, chf, sf, forest.event_grid);

  TreeConfig tree_config;
  tree_config.max_depth = 4;
  Rng tree_rng(11);
  const Tree tree = grow_tree(data, features, tree_config, tree_rng);
  const TreeDocument doc = annotate_tree(tree, features, scores, basis);
  std::ofstream(dir + "/tree.json", std::ios::binary) << tree_document_to_json(doc);
  write_curve_csv(dir + "/lfsdc_root.csv", lfsdc(tree, 0, features, scores, basis));

  std::vector<double> w(features.cols);
  for (std::size_t j = 0; j < features.cols; ++j) w[j] = features.at(0, j);
  ShapMatrix shap = survshap_exact(forest, w, background_rows(features, 8), forest.event_grid);
  shap.unit_id = data.survival[0].id;
  write_shap_csv(dir + "/shap.csv", shap, features.names);
  std::vector<Interval> intervals = event_free_intervals(forest.event_grid);
  if (intervals.size() > 3) intervals.resize(3);
  std::vector<ContributionSummary> shap_rows;
  for (std::size_t j = 0; j < features.cols; ++j)
    for (const Interval& interval : intervals)
      shap_rows.push_back(shap_summary(shap, j, interval));
  write_shap_summary_csv(dir + "/shap_summary.csv", shap_rows, features.names);

  std::vector<ImportanceSummary> fi_rows;
  std::vector<RankedFeature> ranking;
  for (std::size_t j = 0; j < features.cols; ++j) {
    const ImportanceCurve curve = averaged_importance(forest, data, features, j, 2, 21);
    write_importance_csv(dir + "/importance_" + features.names[j] + ".csv", curve);
    for (const Interval& interval : intervals)
      fi_rows.push_back(importance_summary(curve, interval));
    double mean_raw = 0.0;
    for (double v : curve.raw) mean_raw += v;
    ranking.push_back({j, std::abs(mean_raw / static_cast<double>(curve.raw.size()))});
  }
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const RankedFeature& a, const RankedFeature& b) { return a.score > b.score; });
  write_importance_summary_csv(dir + "/importance_summary.csv", fi_rows, features.names);
  write_ranking_csv(dir + "/ranking.csv", ranking, features.names);
}

std::map<std::string, std::string> snapshot(const std::string& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    files[entry.path().filename().string()] = text.str();
  }
  return files;
}

Outcome criterion_pipeline_determinism() {
  Outcome out;
  const std::string dir_a = testutil::scratch_dir("acceptance_pipeline_a");
  const std::string dir_b = testutil::scratch_dir("acceptance_pipeline_b");
  run_pipeline(dir_a);
  run_pipeline(dir_b);
  const auto a = snapshot(dir_a);
  const auto b = snapshot(dir_b);
  out.expect(a.size() == b.size(), "run outputs differ in file count");
  out.expect(a.size() >= 12, "pipeline emitted fewer files than expected");
  for (const auto& [name, bytes] : a) {
    const auto hit = b.find(name);
    out.expect(hit != b.end(), "second run is missing " + name);
    if (hit != b.end())
      out.expect(hit->second == bytes, "byte difference in " + name);
  }
  return out;
}

struct Criterion {
  std::string name;
  double cap_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"survival primitive oracles", 1.0, criterion_survival_primitives},
      {"sparse-basis recovery", 30.0, criterion_basis_recovery},
      {"contribution axioms", 60.0, criterion_contribution_axioms},
      {"summary rate identities", 1e9, criterion_rate_identities},
      {"smoother limits", 5.0, criterion_smoother_limits},
      {"curve metric axioms", 5.0, criterion_metric_axioms},
      {"forest behavior", 600.0, criterion_forest_behavior},
      {"importance signal detection", 300.0, criterion_importance_detection},
      {"discrimination-curve structure", 60.0, criterion_discrimination_structure},
      {"pipeline determinism", 900.0, criterion_pipeline_determinism},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[k].run();
    } catch (const std::exception& e) {
      out.ok = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed >= criteria[k].cap_seconds) {
      out.ok = false;
      if (out.detail.empty())
        out.detail = "runtime " + fmt(elapsed) + " s exceeds cap " +
                     fmt(criteria[k].cap_seconds) + " s";
    }
    std::printf("C%zu %-32s %s (%.2f s)%s%s\n", k + 1, criteria[k].name.c_str(),
                out.ok ? "PASS" : "FAIL", elapsed, out.detail.empty() ? "" : " — ",
                out.detail.c_str());
    std::fflush(stdout);
    if (!out.ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
