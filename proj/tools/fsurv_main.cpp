#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fsurv/dataio.hpp"
#include "fsurv/detail/numfmt.hpp"
#include "fsurv/discrimination.hpp"
#include "fsurv/forest.hpp"
#include "fsurv/fpca.hpp"
#include "fsurv/pfi.hpp"
#include "fsurv/sim.hpp"
#include "fsurv/smoothfn.hpp"
#include "fsurv/survcore.hpp"
#include "fsurv/survshap.hpp"
#include "fsurv/svg.hpp"
#include "fsurv/tree.hpp"
#include "fsurv/types.hpp"

namespace {

using fsurv::DataError;

std::string config_scalar(const nlohmann::json& value) {
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  if (value.is_string()) return value.get<std::string>();
  return value.dump();
}

// JSON config files: one flat object whose keys are long option names.
// Each entry becomes a --key=value token unless the flag was given explicitly,
// so the command line always wins.
std::vector<std::string> expand_config(std::vector<std::string> tokens) {
  std::string path;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (tokens[k] == "--config" && k + 1 < tokens.size())
      path = tokens[k + 1];
    else if (tokens[k].rfind("--config=", 0) == 0)
      path = tokens[k].substr(9);
  }
  if (path.empty()) return tokens;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CLI::ConfigError("cannot open config file " + path);
  const nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (!doc.is_object()) throw CLI::ConfigError("config must be a JSON object: " + path);
  for (const auto& [key, value] : doc.items()) {
    const std::string flag = "--" + key;
    const bool given = std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
      return t == flag || t.rfind(flag + "=", 0) == 0;
    });
    if (given) continue;
    if (value.is_array())
      for (const nlohmann::json& entry : value)
        tokens.push_back(flag + "=" + config_scalar(entry));
    else
      tokens.push_back(flag + "=" + config_scalar(value));
  }
  return tokens;
}

void enable_json_config(CLI::App* sub, std::string& slot) {
  sub->add_option("--config", slot, "JSON file of option defaults; flags override it");
}

fsurv::Interval parse_interval(const std::string& text, const std::string& what) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw DataError(what + ": expected the form lo:hi, got '" + text + "'");
  fsurv::Interval window;
  window.lo = fsurv::detail::parse_double(text.substr(0, colon), what);
  window.hi = fsurv::detail::parse_double(text.substr(colon + 1), what);
  if (!(window.lo < window.hi)) throw DataError(what + ": lo must be below hi");
  return window;
}

std::optional<double> parse_auto_double(const std::string& text, const std::string& what) {
  if (text == "auto") return std::nullopt;
  return fsurv::detail::parse_double(text, what);
}

fsurv::MixedSurvivalDataset load_dataset(const std::string& longitudinal_path,
                                         const std::string& survival_path,
                                         const std::string& window_text) {
  auto samples = fsurv::load_longitudinal(longitudinal_path);
  auto records = fsurv::load_survival(survival_path);
  const fsurv::Interval window = window_text == "auto"
                                     ? fsurv::infer_window(samples, records)
                                     : parse_interval(window_text, "--window");
  return fsurv::join(std::move(samples), std::move(records), window);
}

fsurv::ScoreMatrix load_scores_for(const fsurv::MixedSurvivalDataset& data,
                                   const std::string& path) {
  auto [ids, scores] = fsurv::load_scores(path);
  if (ids.size() != data.size()) throw DataError("score file subject count mismatch");
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] != data.survival[i].id)
      throw DataError("score file subject order differs at id " + ids[i]);
  return scores;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << text;
}

std::string out_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir);
}

std::vector<std::size_t> resolve_features(const std::string& list,
                                          const std::vector<std::string>& names) {
  std::vector<std::size_t> selected;
  if (list == "all") {
    for (std::size_t j = 0; j < names.size(); ++j) selected.push_back(j);
    return selected;
  }
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    const std::string token = list.substr(start, comma - start);
    const auto hit = std::find(names.begin(), names.end(), token);
    if (hit == names.end()) throw DataError("unknown feature '" + token + "'");
    selected.push_back(static_cast<std::size_t>(hit - names.begin()));
    start = comma + 1;
  }
  return selected;
}

// Step function as a drawable staircase starting at the domain edge.
fsurv::Series step_series(const fsurv::StepFunction& f, double from, std::string label,
                          std::string color = {}) {
  fsurv::Series s;
  s.step = true;
  s.label = std::move(label);
  s.color = std::move(color);
  s.x.push_back(from);
  s.y.push_back(f.value_before_first);
  for (std::size_t k = 0; k < f.jump_times.size(); ++k) {
    s.x.push_back(f.jump_times[k]);
    s.y.push_back(f.values[k]);
  }
  return s;
}

fsurv::Chart trajectories_chart(const fsurv::MixedSurvivalDataset& data) {
  fsurv::Chart chart;
  chart.title = "Observed trajectories by outcome";
  chart.x_label = "t";
  chart.y_label = "Y(t)";
  bool labeled_event = false, labeled_censored = false;
  for (std::size_t i = 0; i < data.size(); ++i) {
    fsurv::Series s;
    s.x = data.samples[i].times;
    s.y = data.samples[i].values;
    s.width = 1.0;
    if (data.survival[i].status) {
      s.color = "#d62728";
      if (!labeled_event) s.label = "event";
      labeled_event = true;
    } else {
      s.color = "#1f77b4";
      if (!labeled_censored) s.label = "censored";
      labeled_censored = true;
    }
    chart.series.push_back(std::move(s));
  }
  return chart;
}

std::vector<double> thinned_boundaries(const std::vector<double>& grid) {
  if (grid.size() <= 30) return grid;
  std::vector<double> out;
  const std::size_t stride = (grid.size() + 29) / 30;
  for (std::size_t k = 0; k < grid.size(); k += stride) out.push_back(grid[k]);
  return out;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  std::string config_path;
  std::string scenario = "A";
  std::size_t n = 200;
  std::uint64_t seed = 1;
  double event_fraction = 0.40;
  std::string out_dir;
  bool svg = false;
};

void run_simulate(const SimulateOptions& opt) {
  fsurv::SimConfig config;
  config.scenario = opt.scenario[0];
  config.n = opt.n;
  config.seed = opt.seed;
  config.event_fraction = opt.event_fraction;
  const fsurv::SimResult result = fsurv::simulate(config);
  ensure_dir(opt.out_dir);
  fsurv::write_longitudinal(out_path(opt.out_dir, "longitudinal.csv"), result.data.samples);
  fsurv::write_survival(out_path(opt.out_dir, "survival.csv"), result.data.survival);
  write_file(out_path(opt.out_dir, "truth.json"), fsurv::truth_to_json(result.truth));
  if (opt.svg)
    fsurv::write_chart(out_path(opt.out_dir, "trajectories.svg"),
                       trajectories_chart(result.data));
}

// -------------------------------------------------------------------- fpca

struct FpcaOptions {
  std::string config_path;
  std::string longitudinal_path, survival_path, out_dir;
  std::string window = "auto";
  std::size_t components = 5;
  double mean_bandwidth = 0.0;  // 0 = span/10
  double cov_bandwidth = 0.0;   // 0 = span/5
  std::size_t grid_size = 101;
  bool svg = false;
};

void run_fpca(const FpcaOptions& opt) {
  const fsurv::MixedSurvivalDataset data =
      load_dataset(opt.longitudinal_path, opt.survival_path, opt.window);
  const double span = data.window.length();
  const double mean_bw = opt.mean_bandwidth > 0.0 ? opt.mean_bandwidth : span / 10.0;
  const double cov_bw = opt.cov_bandwidth > 0.0 ? opt.cov_bandwidth : span / 5.0;

  std::vector<std::string> warnings;
  const fsurv::MeanFunction mean =
      fsurv::estimate_mean(data.samples, data.window, mean_bw, opt.grid_size, &warnings);
  const fsurv::CovarianceEstimate cov =
      fsurv::estimate_covariance(data.samples, mean, cov_bw, &warnings);
  const fsurv::FunctionalBasis basis =
      fsurv::eigendecompose(cov, mean, opt.components, &warnings);
  const fsurv::ScoreMatrix scores = fsurv::pace_scores(data.samples, basis);
  for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';

  ensure_dir(opt.out_dir);
  write_file(out_path(opt.out_dir, "basis.json"), fsurv::basis_to_json(basis));
  std::vector<std::string> ids;
  for (const auto& record : data.survival) ids.push_back(record.id);
  fsurv::write_scores(out_path(opt.out_dir, "scores.csv"), ids, scores);

  if (opt.svg) {
    fsurv::Chart mean_chart;
    mean_chart.title = "Smoothed mean function";
    mean_chart.x_label = "t";
    mean_chart.y_label = "mu(t)";
    mean_chart.series.push_back({basis.grid, basis.mean.values, "mean", "#1f77b4", false, false,
                                 false, 2.0});
    fsurv::write_chart(out_path(opt.out_dir, "mean.svg"), mean_chart);

    fsurv::Chart eigen_chart;
    eigen_chart.title = "Eigenfunctions";
    eigen_chart.x_label = "t";
    eigen_chart.y_label = "xi(t)";
    for (std::size_t m = 0; m < basis.n_components(); ++m) {
      fsurv::Series s;
      s.x = basis.grid;
      s.y = basis.eigenfunctions[m];
      s.label = "pc" + std::to_string(m + 1);
      eigen_chart.series.push_back(std::move(s));
    }
    fsurv::write_chart(out_path(opt.out_dir, "eigenfunctions.svg"), eigen_chart);
  }
}

// --------------------------------------------------------- tree and forest

struct GrowOptions {
  std::string config_path;
  std::string longitudinal_path, survival_path, basis_path, scores_path, out_dir;
  std::string window = "auto";
  std::size_t min_node_size = 5;
  int max_depth = 10;
  std::optional<double> alpha;
  std::optional<std::size_t> mtry;
  std::size_t n_trees = 1000;
  std::uint64_t seed = 1;
  bool svg = false;
};

struct LoadedDesign {
  fsurv::MixedSurvivalDataset data;
  fsurv::FunctionalBasis basis;
  fsurv::ScoreMatrix scores;
  fsurv::FeatureMatrix features;
};

LoadedDesign load_design(const GrowOptions& opt) {
  LoadedDesign design;
  design.data = load_dataset(opt.longitudinal_path, opt.survival_path, opt.window);
  design.basis = fsurv::basis_from_json(read_file(opt.basis_path));
  design.scores = load_scores_for(design.data, opt.scores_path);
  design.features = fsurv::make_features(design.data, design.scores);
  return design;
}

void run_grow_tree(const GrowOptions& opt) {
  const LoadedDesign design = load_design(opt);
  fsurv::TreeConfig config;
  config.min_node_size = opt.min_node_size;
  config.max_depth = opt.max_depth;
  config.alpha = opt.alpha;
  config.mtry = opt.mtry;
  fsurv::Rng rng(opt.seed);
  const fsurv::Tree tree = fsurv::grow_tree(design.data, design.features, config, rng);
  const fsurv::TreeDocument doc =
      fsurv::annotate_tree(tree, design.features, design.scores, design.basis);
  ensure_dir(opt.out_dir);
  write_file(out_path(opt.out_dir, "tree.json"), fsurv::tree_document_to_json(doc));

  if (opt.svg) {
    fsurv::Chart terminals;
    terminals.title = "Terminal survival estimates";
    terminals.x_label = "t";
    terminals.y_label = "S(t)";
    for (const fsurv::TreeNode& node : tree.nodes)
      if (node.is_terminal)
        terminals.series.push_back(
            step_series(node.sf, design.data.window.lo, "node " + std::to_string(node.id)));
    fsurv::write_chart(out_path(opt.out_dir, "terminals.svg"), terminals);

    if (!tree.root().is_terminal) {
      fsurv::Chart root_chart;
      root_chart.title = "Root separation";
      root_chart.x_label = "t";
      root_chart.y_label = "X(t)";
      const fsurv::SeparationRegions regions =
          fsurv::separation_regions(tree, 0, design.features);
      bool labeled_left = false, labeled_right = false;
      for (std::size_t i : regions.left_ids) {
        std::vector<double> row(design.scores.cols);
        for (std::size_t m = 0; m < row.size(); ++m) row[m] = design.scores.at(i, m);
        fsurv::Series s{design.basis.grid, fsurv::reconstruct(row, design.basis),
                        labeled_left ? "" : "left region", "#9ecae1", false, false, false, 1.0};
        labeled_left = true;
        root_chart.series.push_back(std::move(s));
      }
      for (std::size_t i : regions.right_ids) {
        std::vector<double> row(design.scores.cols);
        for (std::size_t m = 0; m < row.size(); ++m) row[m] = design.scores.at(i, m);
        fsurv::Series s{design.basis.grid, fsurv::reconstruct(row, design.basis),
                        labeled_right ? "" : "right region", "#fdae6b", false, false, false, 1.0};
        labeled_right = true;
        root_chart.series.push_back(std::move(s));
      }
      const fsurv::DiscriminationCurve root_curve =
          fsurv::lfsdc(tree, 0, design.features, design.scores, design.basis);
      root_chart.series.push_back({root_curve.grid, root_curve.values, "LFSDC", "#1f77b4",
                                   false, false, false, 2.5});
      fsurv::write_chart(out_path(opt.out_dir, "root_lfsdc.svg"), root_chart);

      int deepest = 0;
      for (const fsurv::TreeNode& node : tree.nodes)
        if (node.is_terminal && node.depth > tree.node(deepest).depth) deepest = node.id;
      const auto profile = fsurv::path_distance_profile(tree, deepest, design.features,
                                                        design.scores, design.basis);
      fsurv::Chart profile_chart;
      profile_chart.title = "Separability along the deepest path";
      profile_chart.x_label = "depth";
      profile_chart.y_label = "d2";
      fsurv::Series s;
      s.markers = true;
      s.label = "d2";
      for (const auto& [depth, d2] : profile) {
        s.x.push_back(depth);
        s.y.push_back(d2);
      }
      profile_chart.series.push_back(std::move(s));
      fsurv::write_chart(out_path(opt.out_dir, "depth_profile.svg"), profile_chart);
    }
  }
}

void run_grow_forest(const GrowOptions& opt) {
  const LoadedDesign design = load_design(opt);
  fsurv::ForestConfig config;
  config.n_trees = opt.n_trees;
  config.tree.min_node_size = opt.min_node_size;
  config.tree.max_depth = opt.max_depth;
  config.tree.alpha = opt.alpha;
  config.tree.mtry = opt.mtry;
  const fsurv::Forest forest = fsurv::grow_forest(design.data, design.features, config, opt.seed);
  ensure_dir(opt.out_dir);
  fsurv::save_forest(out_path(opt.out_dir, "forest.jsonl"), forest);

  if (opt.svg) {
    fsurv::Chart chart;
    chart.title = "Out-of-bag ensemble survival";
    chart.x_label = "t";
    chart.y_label = "S(t)";
    const std::size_t shown = std::min<std::size_t>(design.data.size(), 12);
    for (std::size_t i = 0; i < shown; ++i) {
      std::vector<double> w(design.features.cols);
      for (std::size_t j = 0; j < w.size(); ++j) w[j] = design.features.at(i, j);
      chart.series.push_back(step_series(fsurv::oob_ensemble_sf(forest, i, w),
                                         design.data.window.lo, design.data.survival[i].id));
    }
    fsurv::write_chart(out_path(opt.out_dir, "oob_survival.svg"), chart);
  }
}

// ----------------------------------------------------------------- predict

struct PredictOptions {
  std::string config_path;
  std::string forest_path, longitudinal_path, survival_path, basis_path, out_dir;
  std::string scores_path;  // optional; recomputed from the basis when empty
  std::string window = "auto";
  bool svg = false;
};

void run_predict(const PredictOptions& opt) {
  const fsurv::MixedSurvivalDataset data =
      load_dataset(opt.longitudinal_path, opt.survival_path, opt.window);
  const fsurv::Forest forest = fsurv::load_forest(opt.forest_path);
  const fsurv::FunctionalBasis basis = fsurv::basis_from_json(read_file(opt.basis_path));
  const fsurv::ScoreMatrix scores = opt.scores_path.empty()
                                        ? fsurv::pace_scores(data.samples, basis)
                                        : load_scores_for(data, opt.scores_path);
  const fsurv::FeatureMatrix features = fsurv::make_features(data, scores);
  if (features.names != forest.column_names)
    throw DataError("forest was grown on different feature columns");

  std::vector<std::string> ids;
  std::vector<fsurv::StepFunction> chf(data.size()), sf(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    ids.push_back(data.survival[i].id);
    std::vector<double> w(features.cols);
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = features.at(i, j);
    std::tie(chf[i], sf[i]) = fsurv::predict_forest(forest, w);
  }
  ensure_dir(opt.out_dir);
  fsurv::write_predictions(out_path(opt.out_dir, "predictions.csv"), ids, chf, sf,
                           forest.event_grid);
  if (opt.svg) {
    fsurv::Chart chart;
    chart.title = "Ensemble survival predictions";
    chart.x_label = "t";
    chart.y_label = "S(t)";
    for (std::size_t i = 0; i < std::min<std::size_t>(ids.size(), 12); ++i)
      chart.series.push_back(step_series(sf[i], data.window.lo, ids[i]));
    fsurv::write_chart(out_path(opt.out_dir, "predictions.svg"), chart);
  }
}

// ------------------------------------------------------------------- lfsdc

struct LfsdcOptions {
  std::string config_path;
  std::string tree_path, out_path_csv;
  int node = 0;
  std::string svg_path;
};

void run_lfsdc(const LfsdcOptions& opt) {
  const fsurv::TreeDocument doc = fsurv::tree_document_from_json(read_file(opt.tree_path));
  const fsurv::TreeNode& node = doc.tree.node(opt.node);
  fsurv::DiscriminationCurve curve;
  curve.grid = doc.grid;
  curve.values = doc.payloads[static_cast<std::size_t>(node.id)].lfsdc;
  curve.node_id = node.id;
  curve.kind = fsurv::CurveKind::lfsdc;
  fsurv::write_curve_csv(opt.out_path_csv, curve);
  if (!opt.svg_path.empty()) {
    fsurv::Chart chart;
    chart.title = "LFSDC at node " + std::to_string(node.id);
    chart.x_label = "t";
    chart.y_label = "X(t)";
    chart.series.push_back({curve.grid, curve.values, "LFSDC", "#1f77b4", false, false, false,
                            2.0});
    fsurv::write_chart(opt.svg_path, chart);
  }
}

// ----------------------------------------------------------- explanations

struct ExplainLocalOptions {
  std::string config_path;
  std::string forest_path, longitudinal_path, survival_path, basis_path, scores_path, out_dir;
  std::string window = "auto";
  std::string unit;
  std::string features = "all";
  std::string intervals = "auto";
  std::string lambda = "auto";
  std::size_t background_size = 100;
  std::optional<std::size_t> coalition_budget;
  std::uint64_t seed = 1;
  bool svg = false;
};

void run_explain_local(const ExplainLocalOptions& opt) {
  const fsurv::MixedSurvivalDataset data =
      load_dataset(opt.longitudinal_path, opt.survival_path, opt.window);
  const fsurv::Forest forest = fsurv::load_forest(opt.forest_path);
  const fsurv::FunctionalBasis basis = fsurv::basis_from_json(read_file(opt.basis_path));
  const fsurv::ScoreMatrix scores = load_scores_for(data, opt.scores_path);
  const fsurv::FeatureMatrix features = fsurv::make_features(data, scores);
  if (features.names != forest.column_names)
    throw DataError("forest was grown on different feature columns");

  std::size_t unit_row = data.size();
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.survival[i].id == opt.unit) unit_row = i;
  if (unit_row == data.size()) throw DataError("unknown unit '" + opt.unit + "'");
  std::vector<double> w(features.cols);
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = features.at(unit_row, j);

  const auto background = fsurv::background_rows(features, opt.background_size);
  const std::size_t d = features.cols;
  fsurv::ShapMatrix shap;
  if (opt.coalition_budget) {
    fsurv::Rng rng(fsurv::derive_seed(opt.seed, {3}));
    shap = fsurv::survshap_kernel(forest, w, background, forest.event_grid,
                                  *opt.coalition_budget, rng);
  } else if (d <= 12) {
    shap = fsurv::survshap_exact(forest, w, background, forest.event_grid);
  } else {
    fsurv::Rng rng(fsurv::derive_seed(opt.seed, {3}));
    shap = fsurv::survshap_kernel(forest, w, background, forest.event_grid, 2048, rng);
  }
  shap.unit_id = opt.unit;

  const std::vector<std::size_t> selected = resolve_features(opt.features, features.names);
  const std::vector<fsurv::Interval> intervals =
      opt.intervals == "auto"
          ? fsurv::event_free_intervals(forest.event_grid)
          : std::vector<fsurv::Interval>{parse_interval(opt.intervals, "--intervals")};
  const std::optional<double> lambda = parse_auto_double(opt.lambda, "--lambda");

  std::vector<fsurv::ContributionSummary> rows;
  for (std::size_t j : selected)
    for (const fsurv::Interval& interval : intervals)
      rows.push_back(fsurv::shap_summary(shap, j, interval, lambda));

  ensure_dir(opt.out_dir);
  fsurv::write_shap_csv(out_path(opt.out_dir, "shap_" + opt.unit + ".csv"), shap,
                        features.names);
  fsurv::write_shap_summary_csv(out_path(opt.out_dir, "shap_summary_" + opt.unit + ".csv"),
                                rows, features.names);
  if (opt.svg) {
    fsurv::Chart chart;
    chart.title = "Normalized contributions for " + opt.unit;
    chart.x_label = "t";
    chart.y_label = "phi*";
    for (std::size_t j : selected) {
      fsurv::Series s;
      s.x = shap.times;
      s.y.resize(shap.times.size());
      for (std::size_t m = 0; m < shap.times.size(); ++m) s.y[m] = shap.normalized_at(m, j);
      s.label = features.names[j];
      chart.series.push_back(std::move(s));
    }
    chart.dashed_verticals = thinned_boundaries(forest.event_grid);
    fsurv::write_chart(out_path(opt.out_dir, "shap_" + opt.unit + ".svg"), chart);
  }
}

struct ExplainGlobalOptions {
  std::string config_path;
  std::string forest_path, longitudinal_path, survival_path, scores_path, out_dir;
  std::string window = "auto";
  std::string features = "all";
  std::string intervals = "auto";
  std::string lambda = "auto";
  std::size_t repeats = 10;
  std::uint64_t seed = 1;
  bool svg = false;
};

void run_explain_global(const ExplainGlobalOptions& opt) {
  const fsurv::MixedSurvivalDataset data =
      load_dataset(opt.longitudinal_path, opt.survival_path, opt.window);
  const fsurv::Forest forest = fsurv::load_forest(opt.forest_path);
  const fsurv::ScoreMatrix scores = load_scores_for(data, opt.scores_path);
  const fsurv::FeatureMatrix features = fsurv::make_features(data, scores);
  if (features.names != forest.column_names)
    throw DataError("forest was grown on different feature columns");

  const std::vector<std::size_t> selected = resolve_features(opt.features, features.names);
  const std::vector<fsurv::Interval> intervals =
      opt.intervals == "auto"
          ? fsurv::event_free_intervals(forest.event_grid)
          : std::vector<fsurv::Interval>{parse_interval(opt.intervals, "--intervals")};
  const std::optional<double> lambda = parse_auto_double(opt.lambda, "--lambda");

  ensure_dir(opt.out_dir);
  std::vector<fsurv::ImportanceCurve> curves;
  for (std::size_t j = 0; j < features.cols; ++j)
    curves.push_back(fsurv::averaged_importance(forest, data, features, j, opt.repeats,
                                                opt.seed));

  std::vector<fsurv::ImportanceSummary> rows;
  for (std::size_t j : selected) {
    fsurv::write_importance_csv(
        out_path(opt.out_dir, "importance_" + features.names[j] + ".csv"), curves[j]);
    for (const fsurv::Interval& interval : intervals)
      rows.push_back(fsurv::importance_summary(curves[j], interval, lambda));
  }
  fsurv::write_importance_summary_csv(out_path(opt.out_dir, "importance_summary.csv"), rows,
                                      features.names);

  std::vector<fsurv::RankedFeature> ranking;
  for (std::size_t j = 0; j < features.cols; ++j) {
    double mean = 0.0;
    for (double v : curves[j].raw) mean += v;
    mean /= static_cast<double>(curves[j].raw.size());
    ranking.push_back({j, std::abs(mean)});
  }
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  fsurv::write_ranking_csv(out_path(opt.out_dir, "ranking.csv"), ranking, features.names);

  if (opt.svg) {
    fsurv::Chart chart;
    chart.title = "Averaged time importance";
    chart.x_label = "t";
    chart.y_label = "FI";
    for (std::size_t j : selected)
      chart.series.push_back({curves[j].times, curves[j].raw, features.names[j], "", false,
                              false, false, 1.5});
    chart.dashed_verticals = thinned_boundaries(forest.event_grid);
    fsurv::write_chart(out_path(opt.out_dir, "importance.svg"), chart);
  }
}

// ------------------------------------------------------------------ report

struct ReportOptions {
  std::string config_path;
  std::string tree_path;
  std::string out_path_json;  // stdout when empty
};

void run_report(const ReportOptions& opt) {
  const fsurv::TreeDocument doc = fsurv::tree_document_from_json(read_file(opt.tree_path));
  const std::string text = fsurv::tree_document_to_json(doc);
  if (opt.out_path_json.empty())
    std::cout << text << '\n';
  else
    write_file(opt.out_path_json, text);
}

// --------------------------------------------------------------- dispatch

void add_design_options(CLI::App* sub, GrowOptions& opt) {
  sub->add_option("--longitudinal", opt.longitudinal_path, "Longitudinal CSV (id,time,value)")
      ->required();
  sub->add_option("--survival", opt.survival_path, "Survival CSV (id,time,status,x1..)")
      ->required();
  sub->add_option("--basis", opt.basis_path, "Basis JSON from fpca")->required();
  sub->add_option("--scores", opt.scores_path, "Score CSV from fpca")->required();
  sub->add_option("--out", opt.out_dir, "Output directory")->required();
  sub->add_option("--window", opt.window, "Study window lo:hi (default: inferred)");
  sub->add_option("--min-node-size", opt.min_node_size, "Minimum subjects per node");
  sub->add_option("--max-depth", opt.max_depth, "Depth cap");
  sub->add_option("--alpha", opt.alpha, "Split p-value gate");
  sub->add_option("--seed", opt.seed, "Root seed");
  sub->add_flag("--svg", opt.svg, "Also emit charts");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functional survival forests over irregular longitudinal predictors"};
  app.require_subcommand(1);

  SimulateOptions sim_opt;
  CLI::App* sim = app.add_subcommand("simulate", "Generate a synthetic scenario");
  sim->add_option("--scenario", sim_opt.scenario, "A or B")
      ->check(CLI::IsMember({"A", "B"}));
  sim->add_option("--n", sim_opt.n, "Subjects");
  sim->add_option("--seed", sim_opt.seed, "Root seed");
  sim->add_option("--event-fraction", sim_opt.event_fraction, "Share of events");
  sim->add_option("--out", sim_opt.out_dir, "Output directory")->required();
  sim->add_flag("--svg", sim_opt.svg, "Also emit charts");
  enable_json_config(sim, sim_opt.config_path);
  sim->callback([&] { run_simulate(sim_opt); });

  FpcaOptions fpca_opt;
  CLI::App* fpca = app.add_subcommand("fpca", "Estimate the functional basis and scores");
  fpca->add_option("--longitudinal", fpca_opt.longitudinal_path, "Longitudinal CSV")->required();
  fpca->add_option("--survival", fpca_opt.survival_path, "Survival CSV")->required();
  fpca->add_option("--out", fpca_opt.out_dir, "Output directory")->required();
  fpca->add_option("--window", fpca_opt.window, "Study window lo:hi (default: inferred)");
  fpca->add_option("--components", fpca_opt.components, "Components to keep");
  fpca->add_option("--mean-bandwidth", fpca_opt.mean_bandwidth, "Mean smoother bandwidth");
  fpca->add_option("--cov-bandwidth", fpca_opt.cov_bandwidth, "Covariance smoother bandwidth");
  fpca->add_option("--grid-size", fpca_opt.grid_size, "Evaluation grid size");
  fpca->add_flag("--svg", fpca_opt.svg, "Also emit charts");
  enable_json_config(fpca, fpca_opt.config_path);
  fpca->callback([&] { run_fpca(fpca_opt); });

  GrowOptions tree_opt;
  CLI::App* tree = app.add_subcommand("grow-tree", "Grow a single survival tree");
  add_design_options(tree, tree_opt);
  enable_json_config(tree, tree_opt.config_path);
  tree->callback([&] { run_grow_tree(tree_opt); });

  GrowOptions forest_opt;
  CLI::App* forest = app.add_subcommand("grow-forest", "Grow a bootstrap forest");
  add_design_options(forest, forest_opt);
  forest->add_option("--trees", forest_opt.n_trees, "Number of trees");
  forest->add_option("--mtry", forest_opt.mtry, "Columns tried per split");
  enable_json_config(forest, forest_opt.config_path);
  forest->callback([&] { run_grow_forest(forest_opt); });

  PredictOptions predict_opt;
  CLI::App* predict = app.add_subcommand("predict", "Ensemble predictions for a dataset");
  predict->add_option("--forest", predict_opt.forest_path, "Forest JSONL")->required();
  predict->add_option("--longitudinal", predict_opt.longitudinal_path, "Longitudinal CSV")
      ->required();
  predict->add_option("--survival", predict_opt.survival_path, "Survival CSV")->required();
  predict->add_option("--basis", predict_opt.basis_path, "Basis JSON")->required();
  predict->add_option("--scores", predict_opt.scores_path,
                      "Score CSV (default: recomputed from the basis)");
  predict->add_option("--out", predict_opt.out_dir, "Output directory")->required();
  predict->add_option("--window", predict_opt.window, "Study window lo:hi");
  predict->add_flag("--svg", predict_opt.svg, "Also emit charts");
  enable_json_config(predict, predict_opt.config_path);
  predict->callback([&] { run_predict(predict_opt); });

  LfsdcOptions lfsdc_opt;
  CLI::App* lfsdc = app.add_subcommand("lfsdc", "Export a node's discrimination curve");
  lfsdc->add_option("--tree", lfsdc_opt.tree_path, "Tree JSON")->required();
  lfsdc->add_option("--node", lfsdc_opt.node, "Node id");
  lfsdc->add_option("--out", lfsdc_opt.out_path_csv, "Curve CSV path")->required();
  lfsdc->add_option("--svg", lfsdc_opt.svg_path, "Chart path");
  enable_json_config(lfsdc, lfsdc_opt.config_path);
  lfsdc->callback([&] { run_lfsdc(lfsdc_opt); });

  ExplainLocalOptions local_opt;
  CLI::App* local = app.add_subcommand("explain-local", "Per-unit contribution curves");
  local->add_option("--forest", local_opt.forest_path, "Forest JSONL")->required();
  local->add_option("--longitudinal", local_opt.longitudinal_path, "Longitudinal CSV")
      ->required();
  local->add_option("--survival", local_opt.survival_path, "Survival CSV")->required();
  local->add_option("--basis", local_opt.basis_path, "Basis JSON")->required();
  local->add_option("--scores", local_opt.scores_path, "Score CSV")->required();
  local->add_option("--out", local_opt.out_dir, "Output directory")->required();
  local->add_option("--window", local_opt.window, "Study window lo:hi");
  local->add_option("--unit", local_opt.unit, "Subject id to explain")->required();
  local->add_option("--features", local_opt.features, "all or comma-separated names");
  local->add_option("--intervals", local_opt.intervals, "auto or one interval a:b");
  local->add_option("--lambda", local_opt.lambda, "auto or a smoothing penalty");
  local->add_option("--background-size", local_opt.background_size, "Background rows");
  local->add_option("--coalition-budget", local_opt.coalition_budget,
                    "Sampled coalitions (default: exact up to 12 features)");
  local->add_option("--seed", local_opt.seed, "Root seed");
  local->add_flag("--svg", local_opt.svg, "Also emit charts");
  enable_json_config(local, local_opt.config_path);
  local->callback([&] { run_explain_local(local_opt); });

  ExplainGlobalOptions global_opt;
  CLI::App* global = app.add_subcommand("explain-global", "Permutation importance curves");
  global->add_option("--forest", global_opt.forest_path, "Forest JSONL")->required();
  global->add_option("--longitudinal", global_opt.longitudinal_path, "Longitudinal CSV")
      ->required();
  global->add_option("--survival", global_opt.survival_path, "Survival CSV")->required();
  global->add_option("--scores", global_opt.scores_path, "Score CSV")->required();
  global->add_option("--out", global_opt.out_dir, "Output directory")->required();
  global->add_option("--window", global_opt.window, "Study window lo:hi");
  global->add_option("--features", global_opt.features, "all or comma-separated names");
  global->add_option("--intervals", global_opt.intervals, "auto or one interval a:b");
  global->add_option("--lambda", global_opt.lambda, "auto or a smoothing penalty");
  global->add_option("--repeats", global_opt.repeats, "Permutations per feature");
  global->add_option("--seed", global_opt.seed, "Root seed");
  global->add_flag("--svg", global_opt.svg, "Also emit charts");
  enable_json_config(global, global_opt.config_path);
  global->callback([&] { run_explain_global(global_opt); });

  ReportOptions report_opt;
  CLI::App* report = app.add_subcommand("report", "Re-emit a saved tree document");
  report->add_option("--tree", report_opt.tree_path, "Tree JSON")->required();
  report->add_option("--out", report_opt.out_path_json, "Output path (default: stdout)");
  enable_json_config(report, report_opt.config_path);
  report->callback([&] { run_report(report_opt); });

  try {
    std::vector<std::string> tokens(argv + 1, argv + argc);
    tokens = expand_config(std::move(tokens));
    std::reverse(tokens.begin(), tokens.end());
    app.parse(std::move(tokens));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
