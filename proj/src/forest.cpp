#include "fsurv/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fsurv/detail/numfmt.hpp"
#include "fsurv/detail/parallel.hpp"

namespace fsurv {

std::size_t default_mtry(std::size_t n_columns) {
  return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_columns))));
}

std::vector<double> eval_on_grid(const StepFunction& f, const std::vector<double>& grid) {
  std::vector<double> out(grid.size());
  std::size_t j = 0;
  double current = f.value_before_first;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    while (j < f.jump_times.size() && f.jump_times[j] <= grid[g]) current = f.values[j++];
    out[g] = current;
  }
  return out;
}

Forest grow_forest(const MixedSurvivalDataset& data, const FeatureMatrix& features,
                   ForestConfig config, std::uint64_t seed) {
  if (config.n_trees < 1) throw DataError("forest needs at least one tree");
  if (features.rows != data.size()) throw DataError("feature rows do not match the dataset");
  if (!config.tree.mtry) config.tree.mtry = default_mtry(features.cols);
  if (*config.tree.mtry < 1 || *config.tree.mtry > features.cols)
    throw DataError("mtry must lie in [1, number of columns]");

  const std::size_t n = data.size();
  std::vector<double> times(n);
  std::vector<std::uint8_t> status(n);
  for (std::size_t i = 0; i < n; ++i) {
    times[i] = data.survival[i].event_time;
    status[i] = data.survival[i].status;
  }

  Forest forest;
  forest.seed = seed;
  forest.config = config;
  forest.event_grid = event_times(data);
  forest.column_kinds = features.kinds;
  forest.column_components = features.components;
  forest.column_names = features.names;
  forest.n_subjects = n;
  forest.trees.resize(config.n_trees);
  forest.ib.resize(config.n_trees);
  forest.oob.resize(config.n_trees);

  detail::parallel_for(config.n_trees, [&](std::size_t b) {
    Rng rng(derive_seed(seed, {b}));
    std::vector<std::size_t> sample(n);
    bool has_event = false;
    for (int attempt = 0; attempt < 100 && !has_event; ++attempt) {
      for (std::size_t i = 0; i < n; ++i) sample[i] = rng.below(n);
      for (std::size_t i : sample)
        if (status[i]) {
          has_event = true;
          break;
        }
    }
    if (!has_event)
      throw DataError("bootstrap sample for tree " + std::to_string(b) +
                      " had no events after 100 redraws");
    std::sort(sample.begin(), sample.end());
    std::vector<std::uint8_t> in_bag(n, 0);
    for (std::size_t i : sample) in_bag[i] = 1;
    for (std::size_t i = 0; i < n; ++i)
      if (!in_bag[i]) forest.oob[b].push_back(i);
    forest.ib[b] = sample;
    forest.trees[b] = grow_tree(features, times, status, std::move(sample), config.tree, rng);
  });
  return forest;
}

std::pair<StepFunction, StepFunction> predict_forest(const Forest& forest,
                                                     const std::vector<double>& w) {
  const std::size_t m = forest.event_grid.size();
  std::vector<double> chf_sum(m, 0.0), sf_sum(m, 0.0);
  for (const Tree& tree : forest.trees) {
    const TreeNode& leaf = tree.node(route_to_terminal(tree, w));
    const std::vector<double> chf = eval_on_grid(leaf.chf, forest.event_grid);
    const std::vector<double> sf = eval_on_grid(leaf.sf, forest.event_grid);
    for (std::size_t g = 0; g < m; ++g) {
      chf_sum[g] += chf[g];
      sf_sum[g] += sf[g];
    }
  }
  const double b = static_cast<double>(forest.trees.size());
  StepFunction chf, sf;
  chf.jump_times = forest.event_grid;
  chf.value_before_first = 0.0;
  sf.jump_times = forest.event_grid;
  sf.value_before_first = 1.0;
  chf.values.resize(m);
  sf.values.resize(m);
  for (std::size_t g = 0; g < m; ++g) {
    chf.values[g] = chf_sum[g] / b;
    sf.values[g] = std::clamp(sf_sum[g] / b, 0.0, 1.0);
  }
  return {std::move(chf), std::move(sf)};
}

StepFunction oob_ensemble_sf(const Forest& forest, std::size_t i,
                             const std::vector<double>& w_i) {
  const std::size_t m = forest.event_grid.size();
  std::vector<double> sf_sum(m, 0.0);
  std::size_t n_trees = 0;
  for (std::size_t b = 0; b < forest.trees.size(); ++b) {
    if (!std::binary_search(forest.oob[b].begin(), forest.oob[b].end(), i)) continue;
    const TreeNode& leaf = forest.trees[b].node(route_to_terminal(forest.trees[b], w_i));
    const std::vector<double> sf = eval_on_grid(leaf.sf, forest.event_grid);
    for (std::size_t g = 0; g < m; ++g) sf_sum[g] += sf[g];
    ++n_trees;
  }
  if (n_trees == 0)
    throw DataError("subject " + std::to_string(i) + " is out of bag in no tree");
  StepFunction sf;
  sf.jump_times = forest.event_grid;
  sf.value_before_first = 1.0;
  sf.values.resize(m);
  for (std::size_t g = 0; g < m; ++g)
    sf.values[g] = std::clamp(sf_sum[g] / static_cast<double>(n_trees), 0.0, 1.0);
  return sf;
}

namespace {

nlohmann::json step_to_json(const StepFunction& f) {
  return {{"t", f.jump_times}, {"v", f.values}, {"v0", f.value_before_first}};
}

StepFunction step_from_json(const nlohmann::json& doc) {
  StepFunction f;
  f.jump_times = doc.at("t").get<std::vector<double>>();
  f.values = doc.at("v").get<std::vector<double>>();
  f.value_before_first = doc.at("v0").get<double>();
  return f;
}

nlohmann::json tree_nodes_to_json(const Tree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const TreeNode& n : tree.nodes) {
    nlohmann::json node{{"id", n.id}, {"depth", n.depth}, {"members", n.membership}};
    if (n.is_terminal) {
      node["chf"] = step_to_json(n.chf);
      node["sf"] = step_to_json(n.sf);
    } else {
      node["split"] = {{"column", n.split.column},
                       {"threshold", n.split.threshold},
                       {"abs_logrank", n.split.abs_logrank},
                       {"p_value", n.split.p_value}};
      node["left"] = n.left;
      node["right"] = n.right;
    }
    nodes.push_back(std::move(node));
  }
  return nodes;
}

Tree tree_nodes_from_json(const nlohmann::json& nodes) {
  Tree tree;
  for (const auto& doc : nodes) {
    TreeNode n;
    n.id = doc.at("id").get<int>();
    n.depth = doc.at("depth").get<int>();
    n.membership = doc.at("members").get<std::vector<std::size_t>>();
    if (doc.contains("split")) {
      n.is_terminal = false;
      n.split.column = doc.at("split").at("column").get<std::size_t>();
      n.split.threshold = doc.at("split").at("threshold").get<double>();
      n.split.abs_logrank = doc.at("split").at("abs_logrank").get<double>();
      n.split.p_value = doc.at("split").at("p_value").get<double>();
      n.left = doc.at("left").get<int>();
      n.right = doc.at("right").get<int>();
    } else {
      n.is_terminal = true;
      n.chf = step_from_json(doc.at("chf"));
      n.sf = step_from_json(doc.at("sf"));
    }
    tree.nodes.push_back(std::move(n));
  }
  if (tree.nodes.empty()) throw DataError("forest file contains an empty tree");
  return tree;
}

}  // namespace

void save_forest(const std::string& path, const Forest& forest) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot write file: " + path);
  nlohmann::json columns = nlohmann::json::array();
  for (std::size_t j = 0; j < forest.column_names.size(); ++j)
    columns.push_back({{"name", forest.column_names[j]},
                       {"kind", forest.column_kinds[j] == ColumnKind::fpc_score ? "fpc" : "scalar"},
                       {"component", forest.column_components[j]}});
  nlohmann::json header{{"type", "header"},
                        {"seed", forest.seed},
                        {"n", forest.n_subjects},
                        {"trees", forest.trees.size()},
                        {"mtry", forest.config.tree.mtry ? *forest.config.tree.mtry : 0},
                        {"min_node_size", forest.config.tree.min_node_size},
                        {"max_depth", forest.config.tree.max_depth},
                        {"event_grid", forest.event_grid},
                        {"columns", columns}};
  if (forest.config.tree.alpha) header["alpha"] = *forest.config.tree.alpha;
  file << header.dump() << "\n";
  for (std::size_t b = 0; b < forest.trees.size(); ++b) {
    nlohmann::json line{{"type", "tree"},
                        {"index", b},
                        {"ib", forest.ib[b]},
                        {"oob", forest.oob[b]},
                        {"nodes", tree_nodes_to_json(forest.trees[b])}};
    file << line.dump() << "\n";
  }
}

Forest load_forest(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open file: " + path);
  std::string line;
  if (!std::getline(file, line)) throw DataError("empty forest file");
  nlohmann::json header = nlohmann::json::parse(line);
  if (header.value("type", "") != "header") throw DataError("forest file must start with a header");

  Forest forest;
  forest.seed = header.at("seed").get<std::uint64_t>();
  forest.n_subjects = header.at("n").get<std::size_t>();
  forest.event_grid = header.at("event_grid").get<std::vector<double>>();
  forest.config.n_trees = header.at("trees").get<std::size_t>();
  const std::size_t mtry = header.at("mtry").get<std::size_t>();
  if (mtry > 0) forest.config.tree.mtry = mtry;
  forest.config.tree.min_node_size = header.at("min_node_size").get<std::size_t>();
  forest.config.tree.max_depth = header.at("max_depth").get<int>();
  if (header.contains("alpha")) forest.config.tree.alpha = header.at("alpha").get<double>();
  for (const auto& col : header.at("columns")) {
    forest.column_names.push_back(col.at("name").get<std::string>());
    forest.column_kinds.push_back(col.at("kind").get<std::string>() == "fpc"
                                      ? ColumnKind::fpc_score
                                      : ColumnKind::scalar);
    forest.column_components.push_back(col.at("component").get<int>());
  }
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    nlohmann::json doc = nlohmann::json::parse(line);
    if (doc.value("type", "") != "tree") throw DataError("unexpected record in forest file");
    forest.trees.push_back(tree_nodes_from_json(doc.at("nodes")));
    forest.ib.push_back(doc.at("ib").get<std::vector<std::size_t>>());
    forest.oob.push_back(doc.at("oob").get<std::vector<std::size_t>>());
  }
  if (forest.trees.size() != forest.config.n_trees)
    throw DataError("forest file tree count does not match its header");
  return forest;
}

void write_predictions(const std::string& path, const std::vector<std::string>& ids,
                       const std::vector<StepFunction>& chf, const std::vector<StepFunction>& sf,
                       const std::vector<double>& grid) {
  if (ids.size() != chf.size() || ids.size() != sf.size())
    throw DataError("prediction export: length mismatch");
  std::string out = "id,t,sf,chf\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::vector<double> s = eval_on_grid(sf[i], grid);
    const std::vector<double> h = eval_on_grid(chf[i], grid);
    for (std::size_t g = 0; g < grid.size(); ++g)
      out += ids[i] + "," + detail::format_double(grid[g]) + "," + detail::format_double(s[g]) +
             "," + detail::format_double(h[g]) + "\n";
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot write file: " + path);
  file << out;
}

}  // namespace fsurv
