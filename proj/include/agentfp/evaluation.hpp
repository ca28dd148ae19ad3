#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "agentfp/classifier.hpp"
#include "agentfp/search.hpp"

namespace agentfp {

// Trains a model on a dataset with a seed. Protocols call it once per fit.
using Trainer = std::function<ClassifierPtr(const LabeledDataset&, std::uint64_t)>;

Trainer fixed_trainer(ModelConfig config);
// Runs cross_validated_search on every fit and returns the refit model.
Trainer search_trainer(SearchSpace space);

struct ClosedSetReport {
  std::vector<std::string> class_names;
  std::vector<double> per_class_f1;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
  std::vector<std::string> warnings;
};

// One-vs-rest F1 per class over all `num_classes` classes. A class with no
// true and no predicted rows scores 0 and is reported in `warnings`.
// Throws EvalError when there are no rows.
ClosedSetReport classification_report(std::span<const std::size_t> truth,
                                      std::span<const std::size_t> predicted,
                                      const std::vector<std::string>& class_names);

double macro_f1(std::span<const std::size_t> truth,
                std::span<const std::size_t> predicted, std::size_t num_classes);

// Test labels are matched to model classes by name. Throws EvalError for an
// empty test set or a test class unknown to the model.
ClosedSetReport closed_set_eval(const Classifier& model, const LabeledDataset& test);

// P[unknown score > known score] + P[tie] / 2, from average ranks.
// Throws EvalError if either side is empty.
double auroc(std::span<const double> unknown_scores,
             std::span<const double> known_scores);

struct OpenSetResult {
  std::string heldout;
  double auroc = 0.0;
  std::size_t n_known = 0;
  std::size_t n_unknown = 0;
};

// Trains on the other agents' train rows, then scores the known agents' test
// rows and every train and test row of `heldout` with 1 - max probability.
// Throws ConfigError if `heldout` is not a class of both splits.
OpenSetResult open_set_loo(const LabeledDataset& train, const LabeledDataset& test,
                           const std::string& heldout, const Trainer& trainer,
                           std::uint64_t seed);

// One leave-one-out run per agent, in class order.
std::vector<OpenSetResult> open_set_report(const LabeledDataset& train,
                                           const LabeledDataset& test,
                                           const Trainer& trainer,
                                           std::uint64_t seed);

struct FeatureImportance {
  std::size_t feature = 0;
  double mean_drop = 0.0;
  double std_drop = 0.0;
};

// Macro-F1 drop after shuffling one column of `test`, per feature in catalog
// order. Throws ConfigError if repeats < 1.
std::vector<FeatureImportance> permutation_importance(const Classifier& model,
                                                      const LabeledDataset& test,
                                                      int repeats,
                                                      std::uint64_t seed);

// Feature indices by decreasing mean drop, ties by index.
std::vector<std::size_t> importance_ranking(std::span<const FeatureImportance> imp);

struct CurvePoint {
  double x = 0.0;
  double macro_f1 = 0.0;
};

struct Curve {
  std::vector<CurvePoint> points;
  std::vector<std::string> warnings;
};

// Nested stratified subsets of `train`: each class keeps round(f * n_c) of
// its rows, smaller fractions being prefixes of larger ones, in original
// row order. Points where a class would keep no rows, or where the trainer
// rejects the subset, are skipped with a warning. Throws ConfigError for a
// fraction outside (0, 1].
Curve training_fraction_curve(const LabeledDataset& train,
                              const LabeledDataset& test,
                              std::span<const double> fractions,
                              const Trainer& trainer, std::uint64_t seed);

// Macro F1 of `model` on test traces cut to their first k events.
// Throws ConfigError for k <= 0.
Curve truncation_curve_test_side(const Classifier& model,
                                 std::span<const Trace> test,
                                 std::span<const std::int64_t> ks);

// Retrains on training traces cut to k events and scores full test traces.
Curve truncation_curve_train_side(std::span<const Trace> train,
                                  std::span<const Trace> test,
                                  const std::vector<std::string>& class_names,
                                  std::span<const std::int64_t> ks,
                                  const Trainer& trainer, std::uint64_t seed);

nlohmann::ordered_json to_json(const ClosedSetReport& report);
nlohmann::ordered_json to_json(std::span<const OpenSetResult> results);
nlohmann::ordered_json to_json(std::span<const FeatureImportance> imp);
nlohmann::ordered_json to_json(const Curve& curve, const std::string& x_name);

std::string format_table(const ClosedSetReport& report);
std::string format_table(std::span<const OpenSetResult> results);
std::string format_table(std::span<const FeatureImportance> imp);
std::string format_table(const Curve& curve, const std::string& x_name);

}  // namespace agentfp
