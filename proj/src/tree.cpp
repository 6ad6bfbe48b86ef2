#include "fsurv/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fsurv {

FeatureMatrix make_features(const MixedSurvivalDataset& data, const ScoreMatrix& scores) {
  if (scores.rows != data.size()) throw DataError("score rows do not match the dataset");
  const std::size_t q = data.n_covariates();
  FeatureMatrix f;
  f.rows = data.size();
  f.cols = q + scores.cols;
  f.data.resize(f.rows * f.cols);
  for (std::size_t j = 0; j < q; ++j) {
    f.kinds.push_back(ColumnKind::scalar);
    f.components.push_back(0);
    f.names.push_back("x" + std::to_string(j + 1));
  }
  for (std::size_t m = 0; m < scores.cols; ++m) {
    f.kinds.push_back(ColumnKind::fpc_score);
    f.components.push_back(static_cast<int>(m + 1));
    f.names.push_back("pc" + std::to_string(m + 1));
  }
  for (std::size_t i = 0; i < f.rows; ++i) {
    for (std::size_t j = 0; j < q; ++j) f.at(i, j) = data.survival[i].covariates[j];
    for (std::size_t m = 0; m < scores.cols; ++m) f.at(i, q + m) = scores.at(i, m);
  }
  return f;
}

const TreeNode& Tree::node(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes.size())
    throw DataError("unknown tree node id " + std::to_string(id));
  return nodes[static_cast<std::size_t>(id)];
}

std::vector<int> Tree::path_to(int node_id) const {
  node(node_id);
  std::vector<int> path;
  int current = 0;
  for (;;) {
    path.push_back(current);
    if (current == node_id) return path;
    const TreeNode& n = nodes[static_cast<std::size_t>(current)];
    if (n.is_terminal) throw DataError("node " + std::to_string(node_id) + " is unreachable");
    // Preorder layout: the left subtree occupies ids [left, right).
    current = (node_id >= n.right) ? n.right : n.left;
  }
}

namespace {

struct NodeSurvival {
  std::vector<double> etimes;   // distinct event times within the node
  std::vector<double> deaths;   // d_l over the whole node
  std::vector<double> at_risk;  // r_l over the whole node
  // Per member: index of its event time in etimes (or -1), and the count of
  // event times at or below its observed time.
  std::vector<int> event_index;
  std::vector<std::size_t> risk_rank;
};

NodeSurvival node_survival(const std::vector<std::size_t>& members,
                           const std::vector<double>& times,
                           const std::vector<std::uint8_t>& status) {
  NodeSurvival ns;
  for (std::size_t i : members)
    if (status[i]) ns.etimes.push_back(times[i]);
  std::sort(ns.etimes.begin(), ns.etimes.end());
  ns.etimes.erase(std::unique(ns.etimes.begin(), ns.etimes.end()), ns.etimes.end());
  const std::size_t m = ns.etimes.size();
  ns.deaths.assign(m, 0.0);
  ns.at_risk.assign(m, 0.0);
  ns.event_index.reserve(members.size());
  ns.risk_rank.reserve(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    const std::size_t i = members[k];
    const auto up =
        std::upper_bound(ns.etimes.begin(), ns.etimes.end(), times[i]) - ns.etimes.begin();
    ns.risk_rank.push_back(static_cast<std::size_t>(up));
    int eidx = -1;
    if (status[i]) {
      eidx = static_cast<int>(std::lower_bound(ns.etimes.begin(), ns.etimes.end(), times[i]) -
                              ns.etimes.begin());
      ns.deaths[static_cast<std::size_t>(eidx)] += 1.0;
    }
    ns.event_index.push_back(eidx);
    for (std::size_t l = 0; l < static_cast<std::size_t>(up); ++l) ns.at_risk[l] += 1.0;
  }
  return ns;
}

// Standardized log-rank for the current left group, matching
// survcore::logrank_statistic term by term.
double sweep_statistic(const NodeSurvival& ns, const std::vector<double>& deaths_left,
                       const std::vector<double>& risk_left) {
  double numerator = 0.0;
  double variance = 0.0;
  for (std::size_t l = 0; l < ns.etimes.size(); ++l) {
    const double r = ns.at_risk[l];
    const double d = ns.deaths[l];
    const double frac_left = risk_left[l] / r;
    numerator += deaths_left[l] - frac_left * d;
    if (r > 1.0) variance += frac_left * (1.0 - frac_left) * ((r - d) / (r - 1.0)) * d;
  }
  if (variance <= 0.0) return 0.0;
  return numerator / std::sqrt(variance);
}

double chi_square_p_value(double statistic) {
  return std::erfc(std::abs(statistic) / std::sqrt(2.0));
}

}  // namespace

std::optional<Split> best_split(const std::vector<std::size_t>& members,
                                const FeatureMatrix& features, const std::vector<double>& times,
                                const std::vector<std::uint8_t>& status,
                                const std::vector<std::size_t>& candidate_columns,
                                std::size_t min_node_size) {
  const std::size_t n = members.size();
  if (n < 2 * min_node_size) return std::nullopt;
  const NodeSurvival ns = node_survival(members, times, status);
  if (ns.etimes.empty()) return std::nullopt;

  std::optional<Split> best;
  std::vector<std::size_t> order(n);
  std::vector<double> deaths_left(ns.etimes.size());
  std::vector<double> risk_left(ns.etimes.size());
  for (std::size_t column : candidate_columns) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return features.at(members[a], column) < features.at(members[b], column);
    });
    std::fill(deaths_left.begin(), deaths_left.end(), 0.0);
    std::fill(risk_left.begin(), risk_left.end(), 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const std::size_t pos = order[k];
      if (ns.event_index[pos] >= 0) deaths_left[static_cast<std::size_t>(ns.event_index[pos])] += 1.0;
      for (std::size_t l = 0; l < ns.risk_rank[pos]; ++l) risk_left[l] += 1.0;
      const double value = features.at(members[pos], column);
      const double next_value = features.at(members[order[k + 1]], column);
      if (value == next_value) continue;
      const std::size_t n_left = k + 1;
      if (n_left < min_node_size || n - n_left < min_node_size) continue;
      const double stat = std::abs(sweep_statistic(ns, deaths_left, risk_left));
      const double threshold = value + 0.5 * (next_value - value);
      if (!best || stat > best->abs_logrank + 1e-12)
        best = Split{column, threshold, stat, chi_square_p_value(stat)};
    }
  }
  return best;
}

namespace {

struct GrowContext {
  const FeatureMatrix& features;
  const std::vector<double>& times;
  const std::vector<std::uint8_t>& status;
  const TreeConfig& config;
  Rng& rng;
  Tree tree;
};

std::vector<std::size_t> draw_columns(GrowContext& ctx) {
  const std::size_t cols = ctx.features.cols;
  std::vector<std::size_t> all(cols);
  std::iota(all.begin(), all.end(), 0);
  if (!ctx.config.mtry || *ctx.config.mtry >= cols) return all;
  const std::size_t k = *ctx.config.mtry;
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t pick = j + ctx.rng.below(cols - j);
    std::swap(all[j], all[pick]);
  }
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

bool pure_in_event_times(const GrowContext& ctx, const std::vector<std::size_t>& members) {
  const std::size_t first = members.front();
  for (std::size_t i : members)
    if (ctx.times[i] != ctx.times[first] || ctx.status[i] != ctx.status[first]) return false;
  return true;
}

int grow_node(GrowContext& ctx, std::vector<std::size_t> members, int depth) {
  const int id = static_cast<int>(ctx.tree.nodes.size());
  ctx.tree.nodes.emplace_back();
  {
    TreeNode& node = ctx.tree.nodes.back();
    node.id = id;
    node.depth = depth;
    node.membership = members;
  }

  std::optional<Split> split;
  std::size_t n_events = 0;
  for (std::size_t i : members) n_events += ctx.status[i] ? 1 : 0;
  const bool can_split = depth < ctx.config.max_depth && n_events >= 1 &&
                         members.size() >= 2 * ctx.config.min_node_size &&
                         !pure_in_event_times(ctx, members);
  if (can_split) {
    const std::vector<std::size_t> columns = draw_columns(ctx);
    split = best_split(members, ctx.features, ctx.times, ctx.status, columns,
                       ctx.config.min_node_size);
    if (split && ctx.config.alpha && split->p_value > *ctx.config.alpha) split.reset();
  }

  if (!split) {
    std::vector<double> t;
    std::vector<std::uint8_t> s;
    t.reserve(members.size());
    s.reserve(members.size());
    for (std::size_t i : members) {
      t.push_back(ctx.times[i]);
      s.push_back(ctx.status[i]);
    }
    TreeNode& node = ctx.tree.nodes[static_cast<std::size_t>(id)];
    node.is_terminal = true;
    node.chf = nelson_aalen(t, s);
    node.sf = kaplan_meier(t, s);
    return id;
  }

  std::vector<std::size_t> left, right;
  for (std::size_t i : members)
    (ctx.features.at(i, split->column) <= split->threshold ? left : right).push_back(i);
  ctx.tree.nodes[static_cast<std::size_t>(id)].is_terminal = false;
  ctx.tree.nodes[static_cast<std::size_t>(id)].split = *split;
  const int left_id = grow_node(ctx, std::move(left), depth + 1);
  const int right_id = grow_node(ctx, std::move(right), depth + 1);
  ctx.tree.nodes[static_cast<std::size_t>(id)].left = left_id;
  ctx.tree.nodes[static_cast<std::size_t>(id)].right = right_id;
  return id;
}

}  // namespace

Tree grow_tree(const FeatureMatrix& features, const std::vector<double>& times,
               const std::vector<std::uint8_t>& status, std::vector<std::size_t> root_members,
               const TreeConfig& config, Rng& rng) {
  if (config.min_node_size < 1) throw DataError("min_node_size must be at least 1");
  if (config.max_depth < 0) throw DataError("max_depth must be nonnegative");
  if (root_members.empty()) throw DataError("tree needs a nonempty root membership");
  GrowContext ctx{features, times, status, config, rng, Tree{}};
  grow_node(ctx, std::move(root_members), 0);
  return std::move(ctx.tree);
}

Tree grow_tree(const MixedSurvivalDataset& data, const FeatureMatrix& features,
               const TreeConfig& config, Rng& rng) {
  std::vector<double> times(data.size());
  std::vector<std::uint8_t> status(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    times[i] = data.survival[i].event_time;
    status[i] = data.survival[i].status;
  }
  std::vector<std::size_t> members(data.size());
  std::iota(members.begin(), members.end(), 0);
  return grow_tree(features, times, status, std::move(members), config, rng);
}

int route_to_terminal(const Tree& tree, const std::vector<double>& w) {
  int current = 0;
  for (;;) {
    const TreeNode& node = tree.node(current);
    if (node.is_terminal) return current;
    if (node.split.column >= w.size()) throw DataError("feature vector too short for this tree");
    const double v = w[node.split.column];
    if (std::isnan(v)) throw DataError("feature vector contains NaN");
    current = v <= node.split.threshold ? node.left : node.right;
  }
}

std::pair<StepFunction, StepFunction> predict_tree(const Tree& tree,
                                                   const std::vector<double>& w) {
  const TreeNode& node = tree.node(route_to_terminal(tree, w));
  return {node.chf, node.sf};
}

GraphicalSurvivalSet graphical_set(const Tree& tree, int terminal_id, const FunctionalBasis& basis,
                                   const ScoreMatrix& scores) {
  const TreeNode& node = tree.node(terminal_id);
  if (!node.is_terminal) throw DataError("node " + std::to_string(terminal_id) + " is not terminal");
  GraphicalSurvivalSet set;
  set.node_id = terminal_id;
  set.chf = node.chf;
  set.sf = node.sf;
  for (std::size_t i : node.membership) {
    std::vector<double> row(scores.cols);
    for (std::size_t m = 0; m < scores.cols; ++m) row[m] = scores.at(i, m);
    set.trajectories.push_back(reconstruct(row, basis));
  }
  return set;
}

std::vector<double> event_times(const MixedSurvivalDataset& data) {
  std::vector<double> times;
  for (const auto& r : data.survival)
    if (r.status) times.push_back(r.event_time);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

}  // namespace fsurv
