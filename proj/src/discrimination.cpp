#include "fsurv/discrimination.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "fsurv/detail/numfmt.hpp"

namespace fsurv {

std::vector<double> local_mean(const std::vector<std::size_t>& membership,
                               const ScoreMatrix& scores, const FunctionalBasis& basis) {
  if (membership.empty()) throw DataError("local mean of an empty node");
  std::vector<double> mean_score(basis.n_components(), 0.0);
  for (std::size_t i : membership)
    for (std::size_t m = 0; m < mean_score.size(); ++m) mean_score[m] += scores.at(i, m);
  for (double& s : mean_score) s /= static_cast<double>(membership.size());
  return reconstruct(mean_score, basis);
}

namespace {

std::vector<PathContribution> fpc_contributions(const Tree& tree, const std::vector<int>& path,
                                                const FeatureMatrix& features) {
  std::vector<PathContribution> out;
  for (int id : path) {
    const TreeNode& n = tree.node(id);
    if (n.is_terminal) continue;
    if (features.kinds[n.split.column] != ColumnKind::fpc_score) continue;
    out.push_back({id, features.components[n.split.column], n.split.threshold});
  }
  return out;
}

void add_contributions(std::vector<double>& values, const std::vector<PathContribution>& terms,
                       const FunctionalBasis& basis) {
  for (const PathContribution& c : terms) {
    if (c.component < 1 || static_cast<std::size_t>(c.component) > basis.n_components())
      throw DataError("path references component " + std::to_string(c.component) +
                      " outside the basis");
    const auto& xi = basis.eigenfunctions[static_cast<std::size_t>(c.component - 1)];
    for (std::size_t k = 0; k < values.size(); ++k) values[k] += c.threshold * xi[k];
  }
}

}  // namespace

DiscriminationCurve lfsdc(const Tree& tree, int node_id, const FeatureMatrix& features,
                          const ScoreMatrix& scores, const FunctionalBasis& basis) {
  const std::vector<int> path = tree.path_to(node_id);
  DiscriminationCurve curve;
  curve.grid = basis.grid;
  curve.node_id = node_id;
  curve.kind = CurveKind::lfsdc;
  curve.contributing_nodes = fpc_contributions(tree, path, features);
  curve.values = local_mean(tree.node(node_id).membership, scores, basis);
  add_contributions(curve.values, curve.contributing_nodes, basis);
  return curve;
}

DiscriminationCurve fsdc(const FunctionalBasis& basis, const std::vector<PathContribution>& path) {
  DiscriminationCurve curve;
  curve.grid = basis.grid;
  curve.kind = CurveKind::fsdc;
  curve.contributing_nodes = path;
  curve.values = basis.mean.values;
  add_contributions(curve.values, path, basis);
  return curve;
}

SeparationRegions separation_regions(const Tree& tree, int node_id, const FeatureMatrix& features) {
  const TreeNode& n = tree.node(node_id);
  if (n.is_terminal) throw DataError("node " + std::to_string(node_id) + " has no split");
  SeparationRegions r;
  r.node_id = node_id;
  r.left_ids = tree.node(n.left).membership;
  r.right_ids = tree.node(n.right).membership;
  r.threshold = n.split.threshold;
  r.feature_kind = features.kinds[n.split.column];
  return r;
}

double l2_distance(const DiscriminationCurve& a, const DiscriminationCurve& b) {
  if (a.grid != b.grid) throw DataError("curves live on different grids");
  if (a.grid.size() < 2) throw DataError("curve grid too short for quadrature");
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < a.grid.size(); ++k) {
    const double da = a.values[k] - b.values[k];
    const double db = a.values[k + 1] - b.values[k + 1];
    acc += 0.5 * (a.grid[k + 1] - a.grid[k]) * (da * da + db * db);
  }
  return std::sqrt(acc);
}

std::vector<std::pair<int, double>> path_distance_profile(const Tree& tree, int leaf_id,
                                                          const FeatureMatrix& features,
                                                          const ScoreMatrix& scores,
                                                          const FunctionalBasis& basis) {
  const std::vector<int> path = tree.path_to(leaf_id);
  std::vector<std::pair<int, double>> profile;
  DiscriminationCurve previous = lfsdc(tree, path.front(), features, scores, basis);
  for (std::size_t k = 1; k < path.size(); ++k) {
    DiscriminationCurve current = lfsdc(tree, path[k], features, scores, basis);
    profile.emplace_back(tree.node(path[k]).depth, l2_distance(current, previous));
    previous = std::move(current);
  }
  return profile;
}

TreeDocument annotate_tree(const Tree& tree, const FeatureMatrix& features,
                           const ScoreMatrix& scores, const FunctionalBasis& basis) {
  TreeDocument doc;
  doc.tree = tree;
  doc.grid = basis.grid;
  doc.column_names = features.names;
  doc.column_kinds = features.kinds;
  doc.column_components = features.components;
  doc.payloads.resize(tree.nodes.size());
  std::vector<int> parent(tree.nodes.size(), -1);
  for (const TreeNode& n : tree.nodes) {
    if (n.is_terminal) continue;
    parent[static_cast<std::size_t>(n.left)] = n.id;
    parent[static_cast<std::size_t>(n.right)] = n.id;
  }
  std::vector<DiscriminationCurve> curves(tree.nodes.size());
  for (const TreeNode& n : tree.nodes) {
    const std::size_t k = static_cast<std::size_t>(n.id);
    curves[k] = lfsdc(tree, n.id, features, scores, basis);
    NodePayload& payload = doc.payloads[k];
    payload.lfsdc = curves[k].values;
    if (!n.is_terminal) {
      SeparationRegions r = separation_regions(tree, n.id, features);
      payload.left_ids = std::move(r.left_ids);
      payload.right_ids = std::move(r.right_ids);
      payload.has_regions = true;
    }
    if (parent[k] >= 0) {
      payload.d2_from_parent = l2_distance(curves[k], curves[static_cast<std::size_t>(parent[k])]);
      payload.has_d2 = true;
    }
  }
  return doc;
}

namespace {

nlohmann::json step_json(const StepFunction& f) {
  return {{"t", f.jump_times}, {"v", f.values}, {"v0", f.value_before_first}};
}

StepFunction step_from(const nlohmann::json& doc) {
  StepFunction f;
  f.jump_times = doc.at("t").get<std::vector<double>>();
  f.values = doc.at("v").get<std::vector<double>>();
  f.value_before_first = doc.at("v0").get<double>();
  return f;
}

nlohmann::json node_json(const TreeDocument& doc, int id) {
  const TreeNode& n = doc.tree.node(id);
  const NodePayload& payload = doc.payloads[static_cast<std::size_t>(id)];
  nlohmann::json j;
  j["node"] = n.id;
  j["depth"] = n.depth;
  j["members"] = n.membership;
  j["lfsdc"] = payload.lfsdc;
  if (payload.has_d2) j["d2_from_parent"] = payload.d2_from_parent;
  if (n.is_terminal) {
    j["chf"] = step_json(n.chf);
    j["sf"] = step_json(n.sf);
  } else {
    j["split"] = {{"column", n.split.column},
                  {"name", doc.column_names[n.split.column]},
                  {"threshold", n.split.threshold},
                  {"abs_logrank", n.split.abs_logrank},
                  {"p_value", n.split.p_value}};
    j["regions"] = {{"left", payload.left_ids}, {"right", payload.right_ids}};
    j["left"] = node_json(doc, n.left);
    j["right"] = node_json(doc, n.right);
  }
  return j;
}

void collect_nodes(const nlohmann::json& j, int depth_check, TreeDocument& doc) {
  TreeNode n;
  n.id = j.at("node").get<int>();
  n.depth = j.at("depth").get<int>();
  n.membership = j.at("members").get<std::vector<std::size_t>>();
  if (n.depth != depth_check) throw DataError("tree document depth mismatch at node " +
                                              std::to_string(n.id));
  NodePayload payload;
  payload.lfsdc = j.at("lfsdc").get<std::vector<double>>();
  if (j.contains("d2_from_parent")) {
    payload.d2_from_parent = j.at("d2_from_parent").get<double>();
    payload.has_d2 = true;
  }
  const bool internal = j.contains("split");
  if (internal) {
    const nlohmann::json& s = j.at("split");
    n.is_terminal = false;
    n.split.column = s.at("column").get<std::size_t>();
    n.split.threshold = s.at("threshold").get<double>();
    n.split.abs_logrank = s.at("abs_logrank").get<double>();
    n.split.p_value = s.at("p_value").get<double>();
    payload.left_ids = j.at("regions").at("left").get<std::vector<std::size_t>>();
    payload.right_ids = j.at("regions").at("right").get<std::vector<std::size_t>>();
    payload.has_regions = true;
    n.left = j.at("left").at("node").get<int>();
    n.right = j.at("right").at("node").get<int>();
  } else {
    n.is_terminal = true;
    n.chf = step_from(j.at("chf"));
    n.sf = step_from(j.at("sf"));
  }
  const std::size_t slot = static_cast<std::size_t>(n.id);
  if (slot >= doc.tree.nodes.size()) {
    doc.tree.nodes.resize(slot + 1);
    doc.payloads.resize(slot + 1);
  }
  doc.tree.nodes[slot] = std::move(n);
  doc.payloads[slot] = std::move(payload);
  if (internal) {
    collect_nodes(j.at("left"), depth_check + 1, doc);
    collect_nodes(j.at("right"), depth_check + 1, doc);
  }
}

}  // namespace

std::string tree_document_to_json(const TreeDocument& doc) {
  nlohmann::json columns = nlohmann::json::array();
  for (std::size_t j = 0; j < doc.column_names.size(); ++j) {
    columns.push_back({{"name", doc.column_names[j]},
                       {"kind", doc.column_kinds[j] == ColumnKind::scalar ? "scalar" : "fpc"},
                       {"component", doc.column_components[j]}});
  }
  nlohmann::json out{{"type", "fsurv-tree"},
                     {"grid", doc.grid},
                     {"columns", columns},
                     {"root", node_json(doc, 0)}};
  return out.dump();
}

TreeDocument tree_document_from_json(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, true, false);
  if (!doc.is_object() || doc.value("type", "") != "fsurv-tree")
    throw DataError("not a tree document");
  TreeDocument out;
  out.grid = doc.at("grid").get<std::vector<double>>();
  for (const nlohmann::json& c : doc.at("columns")) {
    out.column_names.push_back(c.at("name").get<std::string>());
    out.column_kinds.push_back(c.at("kind").get<std::string>() == "scalar" ? ColumnKind::scalar
                                                                           : ColumnKind::fpc_score);
    out.column_components.push_back(c.at("component").get<int>());
  }
  collect_nodes(doc.at("root"), 0, out);
  for (const TreeNode& n : out.tree.nodes)
    if (n.id < 0) throw DataError("tree document has a gap in node ids");
  return out;
}

void write_curve_csv(const std::string& path, const DiscriminationCurve& curve) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "t,value\n";
  for (std::size_t k = 0; k < curve.grid.size(); ++k)
    out << detail::format_double(curve.grid[k]) << ',' << detail::format_double(curve.values[k])
        << '\n';
}

}  // namespace fsurv
