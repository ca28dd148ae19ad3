#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "agentfp/classifier.hpp"
#include "agentfp/forest.hpp"
#include "agentfp/gbt.hpp"
#include "agentfp/linear.hpp"

namespace agentfp {

using ModelConfig = std::variant<LinearConfig, ForestConfig, GbtConfig>;

ModelKind kind_of(const ModelConfig& config);

ClassifierPtr train_model(const LabeledDataset& data, const ModelConfig& config,
                          std::uint64_t seed);

struct SearchSpace {
  std::vector<ModelConfig> candidates;
  std::size_t folds = 3;
};

// Exhaustive 2 x 3 x 3 x 2 grid over n_estimators, max_depth,
// max_features and min_samples_split.
SearchSpace forest_grid();

// `draws` distinct configurations sampled from the boosting grid.
SearchSpace gbt_random_space(std::size_t draws, std::uint64_t seed);
inline constexpr std::size_t kGbtSearchDraws = 40;

// C in {0.01, 0.1, 1, 10}.
SearchSpace linear_grid(Penalty penalty);

// Fold id per row: each class's rows are shuffled with `seed` and dealt
// round-robin into folds.
std::vector<std::size_t> stratified_folds(const std::vector<std::size_t>& labels,
                                          std::size_t num_classes,
                                          std::size_t folds, std::uint64_t seed);

struct SearchResult {
  std::size_t best_index = 0;
  ModelConfig best;
  std::vector<double> mean_accuracy;  // per candidate
  std::size_t fits = 0;               // CV fits, excluding the refit
  ClassifierPtr model;                // refit on the full training split
};

// Selects by mean fold accuracy, first-enumerated candidate on ties, then
// refits on all of `train`. Throws TrainError if a class has fewer rows
// than folds.
SearchResult cross_validated_search(const LabeledDataset& train,
                                    const SearchSpace& space,
                                    std::uint64_t seed);

}  // namespace agentfp
