#include "agentfp/search.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "agentfp/error.hpp"
#include "agentfp/parallel.hpp"
#include "agentfp/rng.hpp"

namespace agentfp {

ModelKind kind_of(const ModelConfig& config) {
  return std::visit(
      [](const auto& c) {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, LinearConfig>) return ModelKind::Linear;
        if constexpr (std::is_same_v<C, ForestConfig>) return ModelKind::Forest;
        return ModelKind::Gbt;
      },
      config);
}

ClassifierPtr train_model(const LabeledDataset& data, const ModelConfig& config,
                          std::uint64_t seed) {
  return std::visit(
      [&](const auto& c) -> ClassifierPtr {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, LinearConfig>) {
          return std::make_shared<LinearModel>(train_linear(data, c, seed));
        } else if constexpr (std::is_same_v<C, ForestConfig>) {
          return std::make_shared<ForestModel>(train_forest(data, c, seed));
        } else {
          return std::make_shared<GbtModel>(train_gbt(data, c, seed));
        }
      },
      config);
}

SearchSpace forest_grid() {
  SearchSpace space;
  for (int trees : {200, 400}) {
    for (int depth : {kUnlimitedDepth, 15, 30}) {
      for (const auto& mf : {MaxFeatures{MaxFeatures::Rule::Sqrt, 1.0},
                             MaxFeatures{MaxFeatures::Rule::Log2, 1.0},
                             MaxFeatures{MaxFeatures::Rule::Fraction, 0.4}}) {
        for (int split : {2, 5}) {
          space.candidates.emplace_back(ForestConfig{trees, depth, mf, split});
        }
      }
    }
  }
  return space;
}

SearchSpace gbt_random_space(std::size_t draws, std::uint64_t seed) {
  static const std::vector<int> n_estimators = {100, 200, 300, 400, 500};
  static const std::vector<double> learning_rate = {0.01, 0.05, 0.1, 0.2, 0.3};
  static const std::vector<int> max_depth = {3, 4, 5, 6, 7, 8};
  static const std::vector<double> subsample = {0.6, 0.7, 0.8, 0.9, 1.0};
  static const std::vector<double> colsample = {0.5, 0.6, 0.7, 0.8, 1.0};
  static const std::vector<double> reg_alpha = {0.0, 0.01, 0.1, 1.0};
  static const std::vector<double> reg_lambda = {0.5, 1.0, 2.0, 5.0};
  const std::size_t grid = n_estimators.size() * learning_rate.size() *
                           max_depth.size() * subsample.size() *
                           colsample.size() * reg_alpha.size() *
                           reg_lambda.size();
  if (draws > grid) throw ConfigError("more draws than grid points");

  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, grid - 1);
  std::set<std::size_t> seen;
  SearchSpace space;
  while (space.candidates.size() < draws) {
    std::size_t code = pick(rng);
    if (!seen.insert(code).second) continue;
    auto digit = [&code](std::size_t base) {
      const std::size_t d = code % base;
      code /= base;
      return d;
    };
    GbtConfig c;
    c.n_estimators = n_estimators[digit(n_estimators.size())];
    c.learning_rate = learning_rate[digit(learning_rate.size())];
    c.max_depth = max_depth[digit(max_depth.size())];
    c.subsample = subsample[digit(subsample.size())];
    c.colsample_bytree = colsample[digit(colsample.size())];
    c.reg_alpha = reg_alpha[digit(reg_alpha.size())];
    c.reg_lambda = reg_lambda[digit(reg_lambda.size())];
    space.candidates.emplace_back(c);
  }
  return space;
}

SearchSpace linear_grid(Penalty penalty) {
  SearchSpace space;
  for (double c : {0.01, 0.1, 1.0, 10.0}) {
    space.candidates.emplace_back(LinearConfig{penalty, c, 5000, 1e-6});
  }
  return space;
}

std::vector<std::size_t> stratified_folds(const std::vector<std::size_t>& labels,
                                          std::size_t num_classes,
                                          std::size_t folds, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng(seed);
  std::vector<std::size_t> fold(labels.size(), 0);
  std::size_t offset = 0;
  for (auto& rows : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t j = 0; j < rows.size(); ++j) {
      fold[rows[j]] = (offset + j) % folds;
    }
    offset += rows.size();
  }
  return fold;
}

SearchResult cross_validated_search(const LabeledDataset& train,
                                    const SearchSpace& space,
                                    std::uint64_t seed) {
  if (space.candidates.empty()) throw ConfigError("empty search space");
  if (space.folds < 2) throw ConfigError("need at least 2 folds");
  check_trainable(train, space.folds);

  const auto fold = stratified_folds(train.labels(), train.num_classes(),
                                     space.folds, derive_seed(seed, "folds"));
  std::vector<LabeledDataset> fit_sets(space.folds), eval_sets(space.folds);
  for (std::size_t f = 0; f < space.folds; ++f) {
    for (auto* ds : {&fit_sets[f], &eval_sets[f]}) {
      ds->class_names = train.class_names;
      ds->split = Split::Train;
    }
    for (std::size_t i = 0; i < train.size(); ++i) {
      (fold[i] == f ? eval_sets[f] : fit_sets[f]).rows.push_back(train.rows[i]);
    }
  }

  const std::size_t jobs = space.candidates.size() * space.folds;
  std::vector<double> accuracy(jobs, 0.0);
  parallel_for(jobs, [&](std::size_t j) {
    const std::size_t cand = j / space.folds;
    const std::size_t f = j % space.folds;
    const auto model =
        train_model(fit_sets[f], space.candidates[cand], derive_seed(seed, f));
    std::size_t correct = 0;
    for (const auto& r : eval_sets[f].rows) {
      if (model->predict(r.x) == r.label) ++correct;
    }
    accuracy[j] = static_cast<double>(correct) /
                  static_cast<double>(eval_sets[f].size());
  });

  SearchResult result;
  result.fits = jobs;
  result.mean_accuracy.resize(space.candidates.size());
  for (std::size_t c = 0; c < space.candidates.size(); ++c) {
    double sum = 0.0;
    for (std::size_t f = 0; f < space.folds; ++f) sum += accuracy[c * space.folds + f];
    result.mean_accuracy[c] = sum / static_cast<double>(space.folds);
    if (result.mean_accuracy[c] > result.mean_accuracy[result.best_index]) {
      result.best_index = c;
    }
  }
  result.best = space.candidates[result.best_index];
  result.model = train_model(train, result.best, seed);
  return result;
}

}  // namespace agentfp
