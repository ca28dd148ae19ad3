#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "agentfp/evaluation.hpp"
#include "agentfp/features.hpp"
#include "agentfp/ingest.hpp"
#include "agentfp/perturbation.hpp"
#include "agentfp/simulator.hpp"

using namespace agentfp;

namespace {

constexpr std::uint64_t kSeed = 7;

GbtConfig gbt() {
  GbtConfig c;
  c.n_estimators = 200;
  c.learning_rate = 0.1;
  c.max_depth = 4;
  c.subsample = 0.8;
  c.colsample_bytree = 0.8;
  return c;
}

struct Suite {
  TraceSplits traces;
  std::vector<std::string> names;
  LabeledDataset train;
  LabeledDataset test;
  ClassifierPtr model;
  double full_f1 = 0.0;
};

Suite load(const std::string& name, EpisodeCounts counts = {50, 0, 25}) {
  Suite s;
  const auto c = simulate_corpus(preset_suite(name), counts, kSeed);
  s.traces = split_traces(c.traces, c.manifest);
  s.names = class_names_of(c.traces);
  s.train = featurize(s.traces.train, s.names, Split::Train);
  s.test = featurize(s.traces.test, s.names, Split::Test);
  s.model = fixed_trainer(gbt())(s.train, kSeed);
  s.full_f1 = closed_set_eval(*s.model, s.test).macro_f1;
  return s;
}

const Suite& timing_only() {
  static const Suite s = load("timing-only");
  return s;
}

const Suite& action_only() {
  static const Suite s = load("action-only");
  return s;
}

// Mutual information in nats between a feature and the label, with the
// feature cut into quantile bins and missing values in a bin of their own.
double binned_mutual_information(const LabeledDataset& d, std::size_t f, std::size_t bins) {
  std::vector<double> present;
  for (const auto& r : d.rows) {
    if (!std::isnan(r.x[f])) present.push_back(r.x[f]);
  }
  std::sort(present.begin(), present.end());
  auto bin_of = [&](double v) -> std::size_t {
    if (std::isnan(v)) return bins;
    const auto rank = static_cast<std::size_t>(
        std::lower_bound(present.begin(), present.end(), v) - present.begin());
    return std::min(bins - 1, rank * bins / present.size());
  };
  const std::size_t k = d.num_classes();
  std::vector<std::vector<double>> joint(bins + 1, std::vector<double>(k, 0.0));
  for (const auto& r : d.rows) joint[bin_of(r.x[f])][r.label] += 1.0;
  const double n = static_cast<double>(d.size());
  std::vector<double> pb(bins + 1, 0.0), pc(k, 0.0);
  for (std::size_t b = 0; b <= bins; ++b) {
    for (std::size_t c = 0; c < k; ++c) {
      pb[b] += joint[b][c] / n;
      pc[c] += joint[b][c] / n;
    }
  }
  double mi = 0.0;
  for (std::size_t b = 0; b <= bins; ++b) {
    for (std::size_t c = 0; c < k; ++c) {
      const double p = joint[b][c] / n;
      if (p > 0) mi += p * std::log(p / (pb[b] * pc[c]));
    }
  }
  return mi;
}

}  // namespace

TEST_CASE("timing-only labels carry information only through timing features") {
  const auto& s = timing_only();
  double max_other = 0.0, max_timing = 0.0;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const double mi = binned_mutual_information(s.train, f, 5);
    (is_timing_feature(f) ? max_timing : max_other) =
        std::max(is_timing_feature(f) ? max_timing : max_other, mi);
  }
  // Small-sample bias of the plug-in estimate is about (bins-1)(K-1)/2n.
  CHECK(max_other < 0.1);
  CHECK(max_timing > 5 * max_other);
}

TEST_CASE("timing-only agents are told apart by timing features") {
  const auto& s = timing_only();
  CHECK(s.full_f1 >= 0.8);
  const auto imp = permutation_importance(*s.model, s.test, 5, kSeed);
  const auto rank = importance_ranking(imp);
  for (std::size_t i = 0; i < 5; ++i) {
    CAPTURE(kFeatureNames[rank[i]]);
    CHECK(is_timing_feature(rank[i]));
  }
}

TEST_CASE("action-only agents are told apart without timing") {
  const auto& s = action_only();
  CHECK(s.full_f1 >= 0.8);
  const auto imp = permutation_importance(*s.model, s.test, 5, kSeed);
  const auto rank = importance_ranking(imp);
  for (std::size_t i = 0; i < 3; ++i) {
    CAPTURE(kFeatureNames[rank[i]]);
    CHECK_FALSE(is_timing_feature(rank[i]));
  }
}

TEST_CASE("test-side truncation on timing-only agents") {
  const auto& s = timing_only();
  std::size_t longest = 0;
  for (const auto& t : s.traces.test) longest = std::max(longest, t.size());
  const std::vector<std::int64_t> ks = {1, static_cast<std::int64_t>(longest)};
  const auto curve = truncation_curve_test_side(*s.model, s.traces.test, ks);
  REQUIRE(curve.points.size() == 2);
  // One event has no gaps, so every trace collapses to the same vector.
  CHECK(curve.points[0].macro_f1 <= 0.3);
  CHECK(curve.points[1].macro_f1 == s.full_f1);
}

TEST_CASE("a third of the training data gets close to all of it") {
  const auto& s = action_only();
  const std::vector<double> fractions = {1.0 / 3.0, 1.0};
  const auto curve =
      training_fraction_curve(s.train, s.test, fractions, fixed_trainer(gbt()), kSeed);
  REQUIRE(curve.points.size() == 2);
  CHECK(curve.points[1].macro_f1 == s.full_f1);
  CHECK(curve.points[0].macro_f1 >= curve.points[1].macro_f1 - 0.05);
}

TEST_CASE("delay robustness on timing-only agents") {
  const auto& s = timing_only();
  const std::vector<std::int64_t> budgets = {1, 500, 2000, 5000};
  const auto table = delay_robustness_experiment(s.traces.train, s.traces.test, s.names,
                                                 budgets, fixed_trainer(gbt()), kSeed);
  REQUIRE(table.rows.size() == budgets.size());
  CHECK(table.clean_f1 == s.full_f1);
  CHECK(std::abs(table.rows[0].unadapted_f1 - table.clean_f1) <= 0.01);
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    CHECK(table.rows[i].unadapted_f1 <= table.rows[i - 1].unadapted_f1 + 0.02);
  }
  CHECK(table.rows.back().unadapted_f1 <= table.clean_f1 - 0.3);
}

TEST_CASE("action-only agents survive large delays") {
  const auto& s = action_only();
  const std::vector<std::int64_t> budgets = {5000};
  const auto table = delay_robustness_experiment(s.traces.train, s.traces.test, s.names,
                                                 budgets, fixed_trainer(gbt()), kSeed);
  CHECK(table.rows[0].unadapted_f1 >= table.clean_f1 - 0.1);
  CHECK(table.rows[0].adapted_f1 >= table.clean_f1 - 0.1);
}
