#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fsurv/fpca.hpp"
#include "fsurv/tree.hpp"

namespace fsurv {

// One FPC-splitting node on a path: the component it thresholds and the
// threshold itself, which acts as the eigenfunction weight.
struct PathContribution {
  int node_id = -1;
  int component = 0;  // 1-based
  double threshold = 0.0;
};

enum class CurveKind : std::uint8_t { fsdc, lfsdc };

struct DiscriminationCurve {
  std::vector<double> grid;
  std::vector<double> values;
  int node_id = -1;
  CurveKind kind = CurveKind::lfsdc;
  std::vector<PathContribution> contributing_nodes;  // ordered by depth
};

struct SeparationRegions {
  int node_id = -1;
  std::vector<std::size_t> left_ids;
  std::vector<std::size_t> right_ids;
  double threshold = 0.0;
  ColumnKind feature_kind = ColumnKind::scalar;
};

// Pointwise average of the members' reconstructed trajectories on the basis
// grid.  Bootstrap duplicates count with multiplicity.
std::vector<double> local_mean(const std::vector<std::size_t>& membership,
                               const ScoreMatrix& scores, const FunctionalBasis& basis);

// Local mean of the node's membership plus threshold-weighted eigenfunctions
// of every FPC split on the root..node path, the node's own split included.
DiscriminationCurve lfsdc(const Tree& tree, int node_id, const FeatureMatrix& features,
                          const ScoreMatrix& scores, const FunctionalBasis& basis);

// Non-localized variant: global mean plus the path's weighted eigenfunctions.
DiscriminationCurve fsdc(const FunctionalBasis& basis, const std::vector<PathContribution>& path);

// The two half-spaces a split carves out, as the children's memberships.
SeparationRegions separation_regions(const Tree& tree, int node_id, const FeatureMatrix& features);

// L2 distance between two curves on the same grid (trapezoidal quadrature).
double l2_distance(const DiscriminationCurve& a, const DiscriminationCurve& b);

// Distances between consecutive localized curves along the root..leaf path,
// tagged with the depth of the deeper node.
std::vector<std::pair<int, double>> path_distance_profile(const Tree& tree, int leaf_id,
                                                          const FeatureMatrix& features,
                                                          const ScoreMatrix& scores,
                                                          const FunctionalBasis& basis);

// Per-node payload attached to the tree export.
struct NodePayload {
  std::vector<double> lfsdc;
  std::vector<std::size_t> left_ids;   // filled for internal nodes
  std::vector<std::size_t> right_ids;
  bool has_regions = false;
  double d2_from_parent = 0.0;
  bool has_d2 = false;  // false at the root
};

struct TreeDocument {
  Tree tree;
  std::vector<double> grid;
  std::vector<std::string> column_names;
  std::vector<ColumnKind> column_kinds;
  std::vector<int> column_components;
  std::vector<NodePayload> payloads;  // indexed by node id
};

TreeDocument annotate_tree(const Tree& tree, const FeatureMatrix& features,
                           const ScoreMatrix& scores, const FunctionalBasis& basis);

std::string tree_document_to_json(const TreeDocument& doc);
TreeDocument tree_document_from_json(const std::string& text);

void write_curve_csv(const std::string& path, const DiscriminationCurve& curve);

}  // namespace fsurv
