#include "agentfp/classifier.hpp"

#include <algorithm>
#include <set>

#include "agentfp/error.hpp"

namespace agentfp {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Linear:
      return "linear";
    case ModelKind::Forest:
      return "forest";
    case ModelKind::Gbt:
      return "gbt";
  }
  return "linear";
}

std::size_t argmax_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t Classifier::predict(const FeatureVector& x) const {
  const auto p = predict_proba(x);
  return argmax_lowest(p);
}

std::int32_t DecisionTree::leaf_index(const FeatureVector& x) const {
  std::int32_t n = 0;
  for (;;) {
    const Node& node = nodes[static_cast<std::size_t>(n)];
    if (node.feature < 0) return node.leaf;
    const double v = x[static_cast<std::size_t>(node.feature)];
    if (is_missing(v)) {
      n = node.missing_left ? node.left : node.right;
    } else {
      n = v < node.threshold ? node.left : node.right;
    }
  }
}

std::span<const double> DecisionTree::leaf_values(const FeatureVector& x) const {
  const auto leaf = static_cast<std::size_t>(leaf_index(x));
  return {values.data() + leaf * value_width, value_width};
}

std::vector<std::size_t> DecisionTree::used_features() const {
  std::set<std::size_t> used;
  for (const auto& n : nodes) {
    if (n.feature >= 0) used.insert(static_cast<std::size_t>(n.feature));
  }
  return {used.begin(), used.end()};
}

std::size_t DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<std::int32_t, std::size_t>> stack = {{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    auto [n, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const auto& node = nodes[static_cast<std::size_t>(n)];
    if (node.feature >= 0) {
      stack.emplace_back(node.left, d + 1);
      stack.emplace_back(node.right, d + 1);
    }
  }
  return deepest;
}

void check_trainable(const LabeledDataset& data, std::size_t min_per_class) {
  data.validate();
  if (data.num_classes() < 2) {
    throw TrainError("training needs at least 2 classes, got " +
                     std::to_string(data.num_classes()));
  }
  const auto counts = data.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < min_per_class) {
      throw TrainError("class '" + data.class_names[c] + "' has " +
                       std::to_string(counts[c]) + " rows; at least " +
                       std::to_string(min_per_class) + " required");
    }
  }
}

}  // namespace agentfp
