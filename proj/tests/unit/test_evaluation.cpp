#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <set>

#include "agentfp/error.hpp"
#include "agentfp/evaluation.hpp"
#include "agentfp/gbt.hpp"
#include "../support/test_util.hpp"

using namespace agentfp;
using namespace testutil;

namespace {

double pairwise_auroc(const std::vector<double>& u, const std::vector<double>& k) {
  double wins = 0;
  for (double a : u) {
    for (double b : k) wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  }
  return wins / (static_cast<double>(u.size()) * static_cast<double>(k.size()));
}

// Always predicts class `c` with probability 1.
class ConstantModel final : public Classifier {
 public:
  ConstantModel(std::vector<std::string> names, std::size_t c)
      : Classifier(std::move(names)), c_(c) {}
  ModelKind kind() const override { return ModelKind::Gbt; }
  std::vector<double> predict_proba(const FeatureVector&) const override {
    std::vector<double> p(num_classes(), 0.0);
    p[c_] = 1.0;
    return p;
  }

 private:
  std::size_t c_;
};

// Predicts class 1 iff feature 0 exceeds 0.5.
class StumpModel final : public Classifier {
 public:
  StumpModel() : Classifier({"a", "b"}) {}
  ModelKind kind() const override { return ModelKind::Gbt; }
  std::vector<double> predict_proba(const FeatureVector& x) const override {
    return x[0] > 0.5 ? std::vector<double>{0.0, 1.0} : std::vector<double>{1.0, 0.0};
  }
};

GbtConfig small_gbt() {
  GbtConfig c;
  c.n_estimators = 20;
  c.max_depth = 3;
  return c;
}

}  // namespace

TEST_CASE("auroc equals the pairwise oracle on tied score sets") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t nu = 1 + rng() % 40;
    const std::size_t nk = 1 + rng() % 40;
    const int levels = 1 + static_cast<int>(rng() % 8);
    std::vector<double> u(nu), k(nk);
    for (auto& v : u) v = static_cast<double>(rng() % levels) / levels;
    for (auto& v : k) v = static_cast<double>(rng() % (levels + 2)) / levels;
    CHECK(std::abs(auroc(u, k) - pairwise_auroc(u, k)) <= 1e-9);
  }
  CHECK(auroc(std::vector<double>{1, 2}, std::vector<double>{0}) == 1.0);
  CHECK(auroc(std::vector<double>{0}, std::vector<double>{1, 2}) == 0.0);
  CHECK(auroc(std::vector<double>{3, 3}, std::vector<double>{3}) == 0.5);
  CHECK_THROWS_AS(auroc(std::vector<double>{}, std::vector<double>{1}), EvalError);
}

TEST_CASE("classification report") {
  const std::vector<std::size_t> truth = {0, 0, 1, 1, 2, 2};
  const std::vector<std::size_t> pred = {0, 1, 1, 1, 0, 2};
  const auto r = classification_report(truth, pred, {"a", "b", "c"});
  // a: tp 1, 2 actual, 2 predicted; b: tp 2, 2, 3; c: tp 1, 2, 1.
  CHECK(r.per_class_f1[0] == doctest::Approx(0.5));
  CHECK(r.per_class_f1[1] == doctest::Approx(0.8));
  CHECK(r.per_class_f1[2] == doctest::Approx(2.0 / 3.0));
  CHECK(r.macro_f1 == doctest::Approx((0.5 + 0.8 + 2.0 / 3.0) / 3));
  CHECK(r.accuracy == doctest::Approx(4.0 / 6.0));
  for (std::size_t t = 0; t < 3; ++t) {
    std::size_t row = 0;
    for (auto v : r.confusion[t]) row += v;
    CHECK(row == 2);
  }
  CHECK(r.warnings.empty());
  CHECK(macro_f1(truth, pred, 3) == r.macro_f1);

  const auto perfect = classification_report(truth, truth, {"a", "b", "c"});
  CHECK(perfect.macro_f1 == 1.0);

  const auto empty_class = classification_report(truth, truth, {"a", "b", "c", "d"});
  CHECK(empty_class.per_class_f1[3] == 0.0);
  CHECK(empty_class.warnings.size() == 1);

  CHECK_THROWS_AS(classification_report({}, {}, {"a"}), EvalError);
}

TEST_CASE("closed-set evaluation") {
  const auto test = blobs(3, 10, 1.0, 1, Split::Test);
  const ConstantModel m({"c0", "c1", "c2"}, 1);
  const auto r = closed_set_eval(m, test);
  std::size_t nonzero_cols = 0;
  for (std::size_t p = 0; p < 3; ++p) {
    std::size_t col = 0;
    for (std::size_t t = 0; t < 3; ++t) col += r.confusion[t][p];
    nonzero_cols += col > 0 ? 1 : 0;
  }
  CHECK(nonzero_cols == 1);

  // Test classes are matched by name, not index; the report uses model order.
  const ConstantModel shuffled({"c2", "c0", "c1"}, 0);
  const auto s = closed_set_eval(shuffled, test);
  CHECK(s.class_names[0] == "c2");
  CHECK(s.confusion[0][0] == 10);
  CHECK(s.per_class_f1[0] == doctest::Approx(0.5));

  const ConstantModel narrow({"c0", "c1"}, 0);
  CHECK_THROWS_AS(closed_set_eval(narrow, test), EvalError);
  LabeledDataset none = test;
  none.rows.clear();
  CHECK_THROWS_AS(closed_set_eval(m, none), EvalError);
}

TEST_CASE("uniform random predictor sits near 1/14") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    std::vector<std::size_t> truth, pred;
    for (std::size_t i = 0; i < 14 * 75; ++i) {
      truth.push_back(i % 14);
      pred.push_back(rng() % 14);
    }
    const double f1 = macro_f1(truth, pred, 14);
    CHECK(f1 >= 0.071 - 0.03);
    CHECK(f1 <= 0.071 + 0.03);
  }
}

TEST_CASE("permutation importance") {
  LabeledDataset d;
  d.class_names = {"a", "b"};
  Rng rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 200; ++i) {
    LabeledRow r;
    r.x.values.fill(3.0);
    r.x[0] = u(rng);
    r.x[1] = u(rng);
    r.label = r.x[0] > 0.5 ? 1 : 0;
    d.rows.push_back(r);
  }
  const StumpModel m;
  const auto imp = permutation_importance(m, d, 4, 9);
  REQUIRE(imp.size() == kFeatureCount);
  CHECK(importance_ranking(imp)[0] == 0);
  CHECK(imp[0].mean_drop > 0.3);
  for (std::size_t f = 1; f < kFeatureCount; ++f) {
    CHECK(imp[f].mean_drop == 0.0);
    CHECK(imp[f].std_drop == 0.0);
  }
  const auto again = permutation_importance(m, d, 4, 9);
  CHECK(again[0].mean_drop == imp[0].mean_drop);
  CHECK_THROWS_AS(permutation_importance(m, d, 0, 9), ConfigError);

  std::vector<FeatureImportance> tied = {{0, 0.1, 0}, {1, 0.3, 0}, {2, 0.1, 0}};
  CHECK(importance_ranking(tied) == std::vector<std::size_t>{1, 0, 2});
}

TEST_CASE("training fraction curve") {
  const auto train = blobs(3, 30, 5.0, 1);
  const auto test = blobs(3, 20, 5.0, 2, Split::Test);
  std::vector<std::vector<std::string>> seen;
  const auto base = fixed_trainer(small_gbt());
  const Trainer recording = [&](const LabeledDataset& d, std::uint64_t s) {
    std::vector<std::string> ids;
    for (const auto& r : d.rows) ids.push_back(r.episode_id);
    seen.push_back(ids);
    return base(d, s);
  };
  const std::vector<double> fr = {0.2, 0.5, 1.0};
  const auto curve = training_fraction_curve(train, test, fr, recording, 3);
  REQUIRE(curve.points.size() == 3);
  REQUIRE(seen.size() == 3);
  CHECK(seen[0].size() == 18);
  CHECK(seen[1].size() == 45);
  CHECK(seen[2].size() == 90);
  for (const auto& id : seen[0]) {
    CHECK(std::find(seen[1].begin(), seen[1].end(), id) != seen[1].end());
  }
  // Fraction 1 is the plain closed-set score of a model trained with the same seed.
  const auto full = closed_set_eval(*base(train, 3), test).macro_f1;
  CHECK(curve.points[2].macro_f1 == full);

  const std::vector<double> tiny = {0.001, 1.0};
  const auto skipped = training_fraction_curve(train, test, tiny, base, 3);
  CHECK(skipped.points.size() == 1);
  CHECK(skipped.warnings.size() == 1);

  for (double bad : {0.0, -0.5, 1.5}) {
    const std::vector<double> b = {bad};
    CHECK_THROWS_AS(training_fraction_curve(train, test, b, base, 3), ConfigError);
  }
}

TEST_CASE("open-set protocol bookkeeping") {
  const auto train = blobs(4, 20, 5.0, 1);
  const auto test = blobs(4, 10, 5.0, 2, Split::Test);
  const auto trainer = fixed_trainer(small_gbt());
  const auto r = open_set_loo(train, test, "c2", trainer, 1);
  CHECK(r.heldout == "c2");
  CHECK(r.n_known == 30);
  CHECK(r.n_unknown == 30);
  CHECK(r.auroc >= 0.0);
  CHECK(r.auroc <= 1.0);
  CHECK_THROWS_AS(open_set_loo(train, test, "zz", trainer, 1), ConfigError);
  const auto all = open_set_report(train, test, trainer, 1);
  REQUIRE(all.size() == 4);
  CHECK(all[2].heldout == "c2");
  CHECK(all[2].auroc == open_set_loo(train, test, "c2", trainer, derive_seed(1, "c2")).auroc);
}

TEST_CASE("truncation curves reject non-positive k") {
  const StumpModel m;
  const std::vector<Trace> traces = {make_trace({click(0, 1, 1)}, "a")};
  const std::vector<std::int64_t> ks = {0};
  CHECK_THROWS_AS(truncation_curve_test_side(m, traces, ks), ConfigError);
  CHECK_THROWS_AS(truncation_curve_train_side(traces, traces, {"a"}, ks,
                                              fixed_trainer(small_gbt()), 1),
                  ConfigError);
}

TEST_CASE("report rendering") {
  const std::vector<std::size_t> truth = {0, 1};
  const auto r = classification_report(truth, truth, {"a", "b"});
  const auto j = to_json(r);
  CHECK(j["macro_f1"] == 1.0);
  CHECK(format_table(r).find("macro") != std::string::npos);
  Curve c;
  c.points = {{1, 0.5}, {2, 0.75}};
  CHECK(to_json(c, "k")["points"].size() == 2);
}

TEST_CASE("macro F1 ignores how classes are numbered") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng() % 6;
    std::vector<std::size_t> truth(40), pred(40), perm(k);
    for (auto& v : truth) v = rng() % k;
    for (auto& v : pred) v = rng() % k;
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::size_t> t2, p2;
    for (auto v : truth) t2.push_back(perm[v]);
    for (auto v : pred) p2.push_back(perm[v]);
    CHECK(macro_f1(t2, p2, k) == doctest::Approx(macro_f1(truth, pred, k)).epsilon(1e-12));
  }
}

TEST_CASE("features no tree uses have zero importance") {
  const auto train = blobs(3, 30, 5.0, 1);
  const auto test = blobs(3, 20, 5.0, 2, Split::Test);
  const auto m = train_gbt(train, small_gbt(), 1);
  std::set<std::size_t> used;
  for (const auto& t : m.trees()) {
    for (auto f : t.used_features()) used.insert(f);
  }
  REQUIRE(used.size() < kFeatureCount);
  const auto imp = permutation_importance(m, test, 3, 4);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (!used.count(f)) {
      CAPTURE(f);
      CHECK(imp[f].mean_drop == 0.0);
      CHECK(imp[f].std_drop == 0.0);
    }
  }
}
