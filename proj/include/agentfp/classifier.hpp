#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "agentfp/trace.hpp"

namespace agentfp {

enum class ModelKind : std::uint8_t { Linear, Forest, Gbt };

std::string_view to_string(ModelKind kind);

// A trained multi-class model over the canonical feature vector. Models
// are immutable once trained and safe to share across threads.
class Classifier {
 public:
  explicit Classifier(std::vector<std::string> class_names)
      : class_names_(std::move(class_names)) {}
  virtual ~Classifier() = default;

  virtual ModelKind kind() const = 0;

  // One probability per class, summing to 1.
  virtual std::vector<double> predict_proba(const FeatureVector& x) const = 0;

  // Argmax of predict_proba; ties go to the lowest class index.
  std::size_t predict(const FeatureVector& x) const;

  const std::vector<std::string>& class_names() const noexcept {
    return class_names_;
  }
  std::size_t num_classes() const noexcept { return class_names_.size(); }

 private:
  std::vector<std::string> class_names_;
};

using ClassifierPtr = std::shared_ptr<const Classifier>;

std::size_t argmax_lowest(std::span<const double> values);

// Binary decision tree in flat storage. Internal nodes send missing values
// to the learned default side, otherwise `x < threshold` goes left. Leaves
// index rows of `values`, each `value_width` wide.
struct DecisionTree {
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    bool missing_left = true;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t leaf = -1;
  };

  std::vector<Node> nodes;
  std::size_t value_width = 1;
  std::vector<double> values;

  std::int32_t leaf_index(const FeatureVector& x) const;
  std::span<const double> leaf_values(const FeatureVector& x) const;

  // Feature indices used by any split.
  std::vector<std::size_t> used_features() const;
  std::size_t depth() const;
};

// Requires at least two classes and `min_per_class` rows in every class.
void check_trainable(const LabeledDataset& data, std::size_t min_per_class = 2);

}  // namespace agentfp
