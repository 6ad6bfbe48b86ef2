#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fsurv/tree.hpp"

namespace fsurv {

struct ForestConfig {
  std::size_t n_trees = 1000;
  TreeConfig tree;  // tree.mtry defaults to ceil(sqrt(q+p)) when unset
};

struct Forest {
  std::vector<Tree> trees;
  std::vector<std::vector<std::size_t>> ib;   // bootstrap multiset per tree, sorted
  std::vector<std::vector<std::size_t>> oob;  // complement per tree, sorted
  std::vector<double> event_grid;             // pooled distinct event times
  std::uint64_t seed = 0;
  ForestConfig config;
  // Column metadata snapshot for persistence.
  std::vector<ColumnKind> column_kinds;
  std::vector<int> column_components;
  std::vector<std::string> column_names;
  std::size_t n_subjects = 0;
};

std::size_t default_mtry(std::size_t n_columns);

// B trees on independent bootstrap resamples.  Each tree's generator is
// derived from (seed, tree index), so any schedule gives the same forest.
// Bootstrap samples with zero events are redrawn, at most 100 times.
Forest grow_forest(const MixedSurvivalDataset& data, const FeatureMatrix& features,
                   ForestConfig config, std::uint64_t seed);

// Pointwise tree average on the event grid, summed in tree order; the SF is
// clamped to [0,1] after averaging.  Returns (CHF, SF).
std::pair<StepFunction, StepFunction> predict_forest(const Forest& forest,
                                                     const std::vector<double>& w);

// Average over only those trees where subject i is out of bag.
StepFunction oob_ensemble_sf(const Forest& forest, std::size_t i,
                             const std::vector<double>& w_i);

// Step function values on an ascending grid via a single merge walk.
std::vector<double> eval_on_grid(const StepFunction& f, const std::vector<double>& grid);

void save_forest(const std::string& path, const Forest& forest);
Forest load_forest(const std::string& path);

void write_predictions(const std::string& path, const std::vector<std::string>& ids,
                       const std::vector<StepFunction>& chf, const std::vector<StepFunction>& sf,
                       const std::vector<double>& grid);

}  // namespace fsurv
