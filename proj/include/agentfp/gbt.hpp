#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "agentfp/classifier.hpp"

namespace agentfp {

struct GbtConfig {
  int n_estimators = 100;
  double learning_rate = 0.3;
  int max_depth = 6;
  double subsample = 1.0;
  double colsample_bytree = 1.0;
  double reg_alpha = 0.0;
  double reg_lambda = 1.0;
  double min_child_weight = 1.0;
  double gamma = 0.0;

  bool operator==(const GbtConfig&) const = default;
};

// Softmax boosting: one regression tree per class per round, leaf weights
// from the second-order expansion with L1/L2 shrinkage. `trees` is stored
// round-major: tree r * K + k belongs to class k.
class GbtModel final : public Classifier {
 public:
  GbtModel(std::vector<std::string> class_names, GbtConfig config,
           std::vector<DecisionTree> trees);

  ModelKind kind() const override { return ModelKind::Gbt; }
  std::vector<double> predict_proba(const FeatureVector& x) const override;
  std::vector<double> margins(const FeatureVector& x) const;

  const GbtConfig& config() const noexcept { return config_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

 private:
  GbtConfig config_;
  std::vector<DecisionTree> trees_;
};

// Cross-entropy of softmax(logits) against `label`.
double softmax_loss(std::span<const double> logits, std::size_t label);

// Per-class gradient p - y and diagonal hessian p (1 - p) of softmax_loss.
void softmax_grad_hess(std::span<const double> logits, std::size_t label,
                       std::span<double> grad, std::span<double> hess);

void softmax_inplace(std::span<double> logits);

// Throws TrainError for fewer than 2 classes or fewer than 2 rows in a
// class. Feature columns that are entirely missing are never split on.
GbtModel train_gbt(const LabeledDataset& data, const GbtConfig& config,
                   std::uint64_t seed);

}  // namespace agentfp
