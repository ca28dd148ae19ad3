#include "agentfp/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "agentfp/error.hpp"
#include "agentfp/parallel.hpp"
#include "agentfp/rng.hpp"

namespace agentfp {

std::size_t MaxFeatures::resolve(std::size_t n_features) const {
  const auto n = static_cast<double>(n_features);
  double v = 0.0;
  switch (rule) {
    case Rule::Sqrt:
      v = std::floor(std::sqrt(n));
      break;
    case Rule::Log2:
      v = std::floor(std::log2(n));
      break;
    case Rule::Fraction:
      v = std::floor(fraction * n);
      break;
  }
  return std::clamp<std::size_t>(static_cast<std::size_t>(v), 1, n_features);
}

std::string MaxFeatures::to_string() const {
  switch (rule) {
    case Rule::Sqrt:
      return "sqrt";
    case Rule::Log2:
      return "log2";
    case Rule::Fraction:
      break;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", fraction);
  return buf;
}

MaxFeatures MaxFeatures::parse(const std::string& text) {
  if (text == "sqrt") return {Rule::Sqrt, 1.0};
  if (text == "log2") return {Rule::Log2, 1.0};
  try {
    std::size_t used = 0;
    const double f = std::stod(text, &used);
    if (used == text.size() && f > 0.0 && f <= 1.0) return {Rule::Fraction, f};
  } catch (const std::exception&) {
  }
  throw ConfigError("max_features must be sqrt, log2 or a fraction in (0, 1]: '" +
                    text + "'");
}

ForestModel::ForestModel(std::vector<std::string> class_names,
                         ForestConfig config, std::vector<DecisionTree> trees)
    : Classifier(std::move(class_names)),
      config_(config),
      trees_(std::move(trees)) {}

std::vector<double> ForestModel::predict_proba(const FeatureVector& x) const {
  std::vector<double> p(num_classes(), 0.0);
  for (const auto& t : trees_) {
    const auto leaf = t.leaf_values(x);
    for (std::size_t c = 0; c < p.size(); ++c) p[c] += leaf[c];
  }
  for (double& v : p) v /= static_cast<double>(trees_.size());
  return p;
}

namespace {

struct GiniSplit {
  double score = -1.0;  // sum over children of sum_c n_c^2 / n
  int feature = -1;
  double threshold = 0.0;
  bool missing_left = true;
};

class GiniTreeBuilder {
 public:
  GiniTreeBuilder(const std::vector<FeatureVector>& x,
                  const std::vector<std::size_t>& y, std::size_t k,
                  const ForestConfig& config, std::size_t mtry, Rng& rng)
      : x_(x), y_(y), k_(k), config_(config), mtry_(mtry), rng_(rng) {}

  DecisionTree build(std::vector<std::uint32_t> rows) {
    DecisionTree tree;
    tree.value_width = k_;
    struct Work {
      std::int32_t node;
      std::vector<std::uint32_t> rows;
      int depth;
    };
    std::vector<Work> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, std::move(rows), 0});
    while (!stack.empty()) {
      Work w = std::move(stack.back());
      stack.pop_back();
      const auto counts = class_counts(w.rows);
      const bool pure =
          std::count_if(counts.begin(), counts.end(),
                        [](double c) { return c > 0; }) <= 1;
      GiniSplit split;
      if (!pure && w.depth < config_.max_depth &&
          w.rows.size() >= static_cast<std::size_t>(config_.min_samples_split)) {
        split = best_split(w.rows, counts);
      }
      auto& node = tree.nodes[static_cast<std::size_t>(w.node)];
      if (split.feature < 0) {
        node.leaf = static_cast<std::int32_t>(tree.values.size() / k_);
        const auto n = static_cast<double>(w.rows.size());
        for (double c : counts) tree.values.push_back(c / n);
        continue;
      }
      std::vector<std::uint32_t> left, right;
      for (std::uint32_t i : w.rows) {
        const double v = x_[i][static_cast<std::size_t>(split.feature)];
        const bool go_left =
            is_missing(v) ? split.missing_left : v < split.threshold;
        (go_left ? left : right).push_back(i);
      }
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.missing_left = split.missing_left;
      node.left = static_cast<std::int32_t>(tree.nodes.size());
      node.right = node.left + 1;
      const std::int32_t l = node.left;
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      stack.push_back({l + 1, std::move(right), w.depth + 1});
      stack.push_back({l, std::move(left), w.depth + 1});
    }
    return tree;
  }

 private:
  std::vector<double> class_counts(const std::vector<std::uint32_t>& rows) const {
    std::vector<double> c(k_, 0.0);
    for (std::uint32_t i : rows) c[y_[i]] += 1.0;
    return c;
  }

  static double purity(const std::vector<double>& counts, double n) {
    if (n <= 0) return 0.0;
    double s = 0.0;
    for (double c : counts) s += c * c;
    return s / n;
  }

  // Draws features in random order until `mtry` non-constant ones have been
  // examined, continuing past that only while no valid split exists.
  GiniSplit best_split(const std::vector<std::uint32_t>& rows,
                       const std::vector<double>& counts) {
    std::vector<std::size_t> order(kFeatureCount);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);
    const double parent = purity(counts, static_cast<double>(rows.size()));
    GiniSplit best;
    best.score = parent + 1e-12;
    bool found = false;
    std::size_t examined = 0;
    std::vector<std::pair<double, std::size_t>> vals;
    std::vector<double> miss(k_), left(k_), right(k_);
    for (std::size_t f : order) {
      if (examined >= mtry_ && found) break;
      vals.clear();
      std::fill(miss.begin(), miss.end(), 0.0);
      double n_miss = 0;
      for (std::uint32_t i : rows) {
        const double v = x_[i][f];
        if (is_missing(v)) {
          miss[y_[i]] += 1.0;
          n_miss += 1.0;
        } else {
          vals.emplace_back(v, y_[i]);
        }
      }
      if (vals.empty()) continue;
      std::sort(vals.begin(), vals.end());
      if (vals.front().first == vals.back().first && n_miss == 0) continue;
      ++examined;
      std::fill(left.begin(), left.end(), 0.0);
      const auto n_vals = static_cast<double>(vals.size());
      for (std::size_t j = 0; j < vals.size(); ++j) {
        if (j > 0 && vals[j].first > vals[j - 1].first) {
          const auto nl = static_cast<double>(j);
          double mid = 0.5 * (vals[j - 1].first + vals[j].first);
          if (!(mid > vals[j - 1].first)) mid = vals[j].first;
          for (std::size_t c = 0; c < k_; ++c) right[c] = counts[c] - miss[c] - left[c];
          // missing to the right
          {
            std::vector<double> r = right;
            for (std::size_t c = 0; c < k_; ++c) r[c] += miss[c];
            const double s = purity(left, nl) + purity(r, n_vals - nl + n_miss);
            if (s > best.score) {
              best = {s, static_cast<int>(f), mid, false};
              found = true;
            }
          }
          if (n_miss > 0) {
            std::vector<double> l = left;
            for (std::size_t c = 0; c < k_; ++c) l[c] += miss[c];
            const double s = purity(l, nl + n_miss) + purity(right, n_vals - nl);
            if (s > best.score) {
              best = {s, static_cast<int>(f), mid, true};
              found = true;
            }
          }
        }
        left[vals[j].second] += 1.0;
      }
      // all present values on one side, missing on the other
      if (n_miss > 0) {
        std::vector<double> present(k_);
        for (std::size_t c = 0; c < k_; ++c) present[c] = counts[c] - miss[c];
        const double s = purity(present, n_vals) + purity(miss, n_miss);
        if (s > best.score) {
          best = {s, static_cast<int>(f),
                  std::numeric_limits<double>::infinity(), false};
          found = true;
        }
      }
    }
    return found ? best : GiniSplit{};
  }

  const std::vector<FeatureVector>& x_;
  const std::vector<std::size_t>& y_;
  std::size_t k_;
  const ForestConfig& config_;
  std::size_t mtry_;
  Rng& rng_;
};

}  // namespace

ForestModel train_forest(const LabeledDataset& data, const ForestConfig& config,
                         std::uint64_t seed) {
  check_trainable(data);
  if (config.n_estimators < 1 || config.max_depth < 1 ||
      config.min_samples_split < 2) {
    throw TrainError("invalid random forest configuration");
  }
  std::vector<FeatureVector> x;
  std::vector<std::size_t> y;
  for (const auto& r : data.rows) {
    x.push_back(r.x);
    y.push_back(r.label);
  }
  const std::size_t n = x.size();
  const std::size_t mtry = config.max_features.resolve(kFeatureCount);
  std::vector<DecisionTree> trees(static_cast<std::size_t>(config.n_estimators));
  parallel_for(trees.size(), [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::uniform_int_distribution<std::uint32_t> pick(
        0, static_cast<std::uint32_t>(n - 1));
    std::vector<std::uint32_t> rows(n);
    for (auto& r : rows) r = pick(rng);
    std::sort(rows.begin(), rows.end());
    GiniTreeBuilder builder(x, y, data.num_classes(), config, mtry, rng);
    trees[t] = builder.build(std::move(rows));
  });
  return ForestModel(data.class_names, config, std::move(trees));
}

}  // namespace agentfp
