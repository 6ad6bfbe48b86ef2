#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fsurv/fpca.hpp"
#include "fsurv/rng.hpp"
#include "fsurv/survcore.hpp"
#include "fsurv/types.hpp"

namespace fsurv {

enum class ColumnKind : std::uint8_t { scalar, fpc_score };

// Mixed feature table: scalar covariates first, then FPC score columns.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major
  std::vector<ColumnKind> kinds;
  std::vector<int> components;  // 1-based FPC index, 0 for scalar columns
  std::vector<std::string> names;

  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
};

FeatureMatrix make_features(const MixedSurvivalDataset& data, const ScoreMatrix& scores);

struct Split {
  std::size_t column = 0;
  double threshold = 0.0;
  double abs_logrank = 0.0;
  double p_value = 1.0;
};

struct TreeNode {
  int id = -1;
  int depth = 0;
  std::vector<std::size_t> membership;  // row indices, duplicates allowed under bootstrap
  bool is_terminal = true;
  Split split;    // meaningful when !is_terminal
  int left = -1;  // child ids
  int right = -1;
  StepFunction chf;  // terminal estimates
  StepFunction sf;
};

struct Tree {
  std::vector<TreeNode> nodes;  // preorder, root at index 0

  const TreeNode& root() const { return nodes.front(); }
  const TreeNode& node(int id) const;
  std::vector<int> path_to(int node_id) const;  // root..node
};

struct TreeConfig {
  std::size_t min_node_size = 5;
  int max_depth = 10;
  std::optional<double> alpha;       // p-value gate, off by default
  std::optional<std::size_t> mtry;   // columns sampled per split; all when unset
};

// Exhaustive scan over the candidate columns and the midpoints of consecutive
// distinct sorted values; maximizes |log-rank|.  Ties within 1e-12 keep the
// lowest column, then the lowest threshold.
std::optional<Split> best_split(const std::vector<std::size_t>& members,
                                const FeatureMatrix& features, const std::vector<double>& times,
                                const std::vector<std::uint8_t>& status,
                                const std::vector<std::size_t>& candidate_columns,
                                std::size_t min_node_size);

Tree grow_tree(const FeatureMatrix& features, const std::vector<double>& times,
               const std::vector<std::uint8_t>& status, std::vector<std::size_t> root_members,
               const TreeConfig& config, Rng& rng);

Tree grow_tree(const MixedSurvivalDataset& data, const FeatureMatrix& features,
               const TreeConfig& config, Rng& rng);

// Routes w through the splits (<= goes left) to its terminal node.
int route_to_terminal(const Tree& tree, const std::vector<double>& w);

// Terminal (CHF, SF) for the feature vector.
std::pair<StepFunction, StepFunction> predict_tree(const Tree& tree, const std::vector<double>& w);

struct GraphicalSurvivalSet {
  int node_id = -1;
  std::vector<std::vector<double>> trajectories;  // one reconstruction per member
  StepFunction chf;
  StepFunction sf;
};

GraphicalSurvivalSet graphical_set(const Tree& tree, int terminal_id, const FunctionalBasis& basis,
                                   const ScoreMatrix& scores);

std::vector<double> event_times(const MixedSurvivalDataset& data);

}  // namespace fsurv
