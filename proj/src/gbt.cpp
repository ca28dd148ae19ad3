#include "agentfp/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "agentfp/error.hpp"
#include "agentfp/rng.hpp"

namespace agentfp {

GbtModel::GbtModel(std::vector<std::string> class_names, GbtConfig config,
                   std::vector<DecisionTree> trees)
    : Classifier(std::move(class_names)),
      config_(config),
      trees_(std::move(trees)) {}

std::vector<double> GbtModel::margins(const FeatureVector& x) const {
  const std::size_t k = num_classes();
  std::vector<double> m(k, 0.0);
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    m[t % k] += trees_[t].leaf_values(x)[0];
  }
  return m;
}

std::vector<double> GbtModel::predict_proba(const FeatureVector& x) const {
  auto m = margins(x);
  softmax_inplace(m);
  return m;
}

void softmax_inplace(std::span<double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : logits) v /= sum;
}

double softmax_loss(std::span<const double> logits, std::size_t label) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  return std::log(sum) + mx - logits[label];
}

void softmax_grad_hess(std::span<const double> logits, std::size_t label,
                       std::span<double> grad, std::span<double> hess) {
  std::vector<double> p(logits.begin(), logits.end());
  softmax_inplace(p);
  for (std::size_t c = 0; c < p.size(); ++c) {
    grad[c] = p[c] - (c == label ? 1.0 : 0.0);
    hess[c] = p[c] * (1.0 - p[c]);
  }
}

namespace {

constexpr double kMinHess = 1e-16;
constexpr double kMinGain = 1e-10;

// L1 soft-threshold of the gradient sum.
double thresholded(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

struct TreeParams {
  double alpha;
  double lambda;
  double min_child_weight;
  double gamma;
  double eta;
  int max_depth;

  double score(double g, double h) const {
    const double t = thresholded(g, alpha);
    return t * t / (h + lambda);
  }
  double weight(double g, double h) const {
    return -thresholded(g, alpha) / (h + lambda);
  }
};

struct SplitCandidate {
  double gain = kMinGain;
  int feature = -1;
  double threshold = 0.0;
  bool missing_left = true;
  double gl = 0, hl = 0, gr = 0, hr = 0;
};

struct BuildNode {
  double g = 0, h = 0;
  int depth = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<FeatureVector>& x,
              const std::vector<std::vector<std::uint32_t>>& sorted,
              const std::vector<std::vector<std::uint32_t>>& missing,
              const TreeParams& params)
      : x_(x), sorted_(sorted), missing_(missing), params_(params) {}

  DecisionTree build(std::span<const double> grad, std::span<const double> hess,
                     const std::vector<char>& in_sample,
                     const std::vector<std::size_t>& features) {
    const std::size_t n = x_.size();
    node_of_.assign(n, -1);
    nodes_.clear();
    splits_.clear();
    child_left_.clear();
    BuildNode root;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_sample[i]) continue;
      node_of_[i] = 0;
      root.g += grad[i];
      root.h += hess[i];
    }
    nodes_.push_back(root);
    splits_.emplace_back();

    std::vector<int> frontier = {0};
    while (!frontier.empty()) {
      if (nodes_[static_cast<std::size_t>(frontier.front())].depth >=
          params_.max_depth) {
        break;
      }
      find_splits(frontier, grad, hess, features);
      std::vector<int> next;
      for (int nd : frontier) {
        const auto& s = splits_[static_cast<std::size_t>(nd)];
        if (s.feature < 0) continue;
        const int depth = nodes_[static_cast<std::size_t>(nd)].depth + 1;
        child_left_.resize(nodes_.size() + 2, -1);
        child_left_[static_cast<std::size_t>(nd)] =
            static_cast<int>(nodes_.size());
        nodes_.push_back({s.gl, s.hl, depth});
        nodes_.push_back({s.gr, s.hr, depth});
        splits_.emplace_back();
        splits_.emplace_back();
        next.push_back(static_cast<int>(nodes_.size()) - 2);
        next.push_back(static_cast<int>(nodes_.size()) - 1);
      }
      if (next.empty()) break;
      for (std::size_t i = 0; i < n; ++i) {
        const int nd = node_of_[i];
        if (nd < 0) continue;
        const auto& s = splits_[static_cast<std::size_t>(nd)];
        if (s.feature < 0) continue;
        const double v = x_[i][static_cast<std::size_t>(s.feature)];
        const bool left = is_missing(v) ? s.missing_left : v < s.threshold;
        node_of_[i] = child_left_[static_cast<std::size_t>(nd)] + (left ? 0 : 1);
      }
      frontier = std::move(next);
    }
    return emit();
  }

 private:
  void find_splits(const std::vector<int>& frontier,
                   std::span<const double> grad, std::span<const double> hess,
                   const std::vector<std::size_t>& features) {
    slot_of_.assign(nodes_.size(), -1);
    for (std::size_t s = 0; s < frontier.size(); ++s) {
      slot_of_[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
    }
    const std::size_t m = frontier.size();
    std::vector<SplitCandidate> best(m);
    std::vector<double> mg(m), mh(m), gl(m), hl(m), last(m);
    std::vector<char> has_last(m);

    for (std::size_t f : features) {
      std::fill(mg.begin(), mg.end(), 0.0);
      std::fill(mh.begin(), mh.end(), 0.0);
      std::fill(gl.begin(), gl.end(), 0.0);
      std::fill(hl.begin(), hl.end(), 0.0);
      std::fill(has_last.begin(), has_last.end(), 0);
      for (std::uint32_t i : missing_[f]) {
        const int s = slot(i);
        if (s < 0) continue;
        mg[static_cast<std::size_t>(s)] += grad[i];
        mh[static_cast<std::size_t>(s)] += hess[i];
      }
      for (std::uint32_t i : sorted_[f]) {
        const int si = slot(i);
        if (si < 0) continue;
        const auto s = static_cast<std::size_t>(si);
        const double v = x_[i][f];
        if (has_last[s] && v > last[s]) {
          const auto& node = nodes_[static_cast<std::size_t>(frontier[s])];
          double mid = 0.5 * (last[s] + v);
          if (!(mid > last[s])) mid = v;
          evaluate(best[s], node, static_cast<int>(f), mid, gl[s], hl[s], mg[s],
                   mh[s]);
        }
        gl[s] += grad[i];
        hl[s] += hess[i];
        last[s] = v;
        has_last[s] = 1;
      }
    }
    for (std::size_t s = 0; s < m; ++s) {
      splits_[static_cast<std::size_t>(frontier[s])] = best[s];
    }
  }

  // Non-missing rows below the threshold are (gl, hl); missing rows (mg, mh)
  // go to whichever side scores better.
  void evaluate(SplitCandidate& best, const BuildNode& node, int feature,
                double threshold, double gl, double hl, double mg,
                double mh) const {
    const double parent = params_.score(node.g, node.h);
    auto consider = [&](double lg, double lh, bool missing_left) {
      const double rg = node.g - lg;
      const double rh = node.h - lh;
      if (lh < params_.min_child_weight || rh < params_.min_child_weight) {
        return;
      }
      const double gain = 0.5 * (params_.score(lg, lh) +
                                  params_.score(rg, rh) - parent) -
                          params_.gamma;
      if (gain > best.gain) {
        best = {gain, feature, threshold, missing_left, lg, lh, rg, rh};
      }
    };
    if (mh > 0.0) {
      consider(gl, hl, false);
      consider(gl + mg, hl + mh, true);
    } else {
      // No missing rows reached this node: default to the heavier child.
      const bool left_heavier = hl >= node.h - hl;
      consider(gl, hl, left_heavier);
    }
  }

  int slot(std::uint32_t row) const {
    const int nd = node_of_[row];
    return nd < 0 ? -1 : slot_of_[static_cast<std::size_t>(nd)];
  }

  DecisionTree emit() const {
    DecisionTree tree;
    tree.value_width = 1;
    tree.nodes.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      auto& out = tree.nodes[i];
      const auto& s = splits_[i];
      const bool internal = s.feature >= 0 && i < child_left_.size() &&
                            child_left_[i] >= 0;
      if (internal) {
        out.feature = s.feature;
        out.threshold = s.threshold;
        out.missing_left = s.missing_left;
        out.left = child_left_[i];
        out.right = child_left_[i] + 1;
      } else {
        out.leaf = static_cast<std::int32_t>(tree.values.size());
        tree.values.push_back(params_.eta *
                              params_.weight(nodes_[i].g, nodes_[i].h));
      }
    }
    return tree;
  }

  const std::vector<FeatureVector>& x_;
  const std::vector<std::vector<std::uint32_t>>& sorted_;
  const std::vector<std::vector<std::uint32_t>>& missing_;
  TreeParams params_;
  std::vector<int> node_of_;
  std::vector<int> slot_of_;
  std::vector<int> child_left_;
  std::vector<BuildNode> nodes_;
  std::vector<SplitCandidate> splits_;
};

}  // namespace

GbtModel train_gbt(const LabeledDataset& data, const GbtConfig& config,
                   std::uint64_t seed) {
  check_trainable(data);
  if (config.n_estimators < 1 || config.max_depth < 1 ||
      !(config.learning_rate > 0) || !(config.subsample > 0) ||
      config.subsample > 1 || !(config.colsample_bytree > 0) ||
      config.colsample_bytree > 1) {
    throw TrainError("invalid gradient boosting configuration");
  }
  const std::size_t n = data.size();
  const std::size_t k = data.num_classes();

  std::vector<FeatureVector> x;
  x.reserve(n);
  std::vector<std::size_t> y;
  y.reserve(n);
  for (const auto& r : data.rows) {
    x.push_back(r.x);
    y.push_back(r.label);
  }

  std::vector<std::vector<std::uint32_t>> sorted(kFeatureCount), missing(kFeatureCount);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    for (std::uint32_t i = 0; i < n; ++i) {
      (is_missing(x[i][f]) ? missing[f] : sorted[f]).push_back(i);
    }
    std::stable_sort(sorted[f].begin(), sorted[f].end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                       return x[a][f] < x[b][f];
                     });
  }

  const TreeParams params{config.reg_alpha,        config.reg_lambda,
                          config.min_child_weight, config.gamma,
                          config.learning_rate,    config.max_depth};
  TreeBuilder builder(x, sorted, missing, params);

  Rng rng(seed);
  std::bernoulli_distribution take_row(config.subsample);
  const auto n_cols = std::max<std::size_t>(
      1, static_cast<std::size_t>(config.colsample_bytree *
                                  static_cast<double>(kFeatureCount)));

  std::vector<double> margin(n * k, 0.0);
  std::vector<double> grad(n * k), hess(n * k);
  std::vector<double> g_col(n), h_col(n);
  std::vector<char> in_sample(n, 1);
  std::vector<std::size_t> all_features(kFeatureCount);
  std::iota(all_features.begin(), all_features.end(), 0);

  std::vector<DecisionTree> trees;
  trees.reserve(static_cast<std::size_t>(config.n_estimators) * k);
  for (int round = 0; round < config.n_estimators; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      softmax_grad_hess({margin.data() + i * k, k}, y[i],
                        {grad.data() + i * k, k}, {hess.data() + i * k, k});
    }
    if (config.subsample < 1.0) {
      for (std::size_t i = 0; i < n; ++i) in_sample[i] = take_row(rng) ? 1 : 0;
    }
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<std::size_t> features = all_features;
      if (n_cols < kFeatureCount) {
        std::shuffle(features.begin(), features.end(), rng);
        features.resize(n_cols);
        std::sort(features.begin(), features.end());
      }
      for (std::size_t i = 0; i < n; ++i) {
        g_col[i] = grad[i * k + c];
        h_col[i] = std::max(hess[i * k + c], kMinHess);
      }
      trees.push_back(builder.build(g_col, h_col, in_sample, features));
      const auto& tree = trees.back();
      for (std::size_t i = 0; i < n; ++i) {
        margin[i * k + c] += tree.leaf_values(x[i])[0];
      }
    }
  }
  return GbtModel(data.class_names, config, std::move(trees));
}

}  // namespace agentfp
