#pragma once

#include <climits>
#include <cstdint>
#include <string>

#include "agentfp/classifier.hpp"

namespace agentfp {

struct MaxFeatures {
  enum class Rule : std::uint8_t { Sqrt, Log2, Fraction };
  Rule rule = Rule::Sqrt;
  double fraction = 1.0;

  // Candidate features per split for `n_features` columns (at least 1).
  std::size_t resolve(std::size_t n_features) const;
  std::string to_string() const;
  static MaxFeatures parse(const std::string& text);

  bool operator==(const MaxFeatures&) const = default;
};

// Unlimited depth.
inline constexpr int kUnlimitedDepth = INT_MAX;

struct ForestConfig {
  int n_estimators = 100;
  int max_depth = kUnlimitedDepth;
  MaxFeatures max_features;
  int min_samples_split = 2;

  bool operator==(const ForestConfig&) const = default;
};

// Bootstrap-aggregated Gini trees; probabilities are the mean of leaf class
// frequencies across trees.
class ForestModel final : public Classifier {
 public:
  ForestModel(std::vector<std::string> class_names, ForestConfig config,
              std::vector<DecisionTree> trees);

  ModelKind kind() const override { return ModelKind::Forest; }
  std::vector<double> predict_proba(const FeatureVector& x) const override;

  const ForestConfig& config() const noexcept { return config_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

 private:
  ForestConfig config_;
  std::vector<DecisionTree> trees_;
};

ForestModel train_forest(const LabeledDataset& data, const ForestConfig& config,
                         std::uint64_t seed);

}  // namespace agentfp
