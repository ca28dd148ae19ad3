#include "agentfp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "agentfp/error.hpp"
#include "agentfp/features.hpp"
#include "agentfp/ingest.hpp"
#include "agentfp/parallel.hpp"
#include "agentfp/rng.hpp"

namespace agentfp {

using nlohmann::ordered_json;

Trainer fixed_trainer(ModelConfig config) {
  return [config](const LabeledDataset& data, std::uint64_t seed) {
    return train_model(data, config, seed);
  };
}

Trainer search_trainer(SearchSpace space) {
  return [space](const LabeledDataset& data, std::uint64_t seed) {
    return cross_validated_search(data, space, seed).model;
  };
}

ClosedSetReport classification_report(std::span<const std::size_t> truth,
                                      std::span<const std::size_t> predicted,
                                      const std::vector<std::string>& class_names) {
  if (truth.empty()) throw EvalError("empty test set");
  if (truth.size() != predicted.size()) {
    throw EvalError("truth and prediction lengths differ");
  }
  const std::size_t k = class_names.size();
  ClosedSetReport r;
  r.class_names = class_names;
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= k || predicted[i] >= k) throw EvalError("label out of range");
    ++r.confusion[truth[i]][predicted[i]];
    if (truth[i] == predicted[i]) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  r.per_class_f1.resize(k);
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t tp = r.confusion[c][c];
    std::size_t actual = 0, pred = 0;
    for (std::size_t j = 0; j < k; ++j) {
      actual += r.confusion[c][j];
      pred += r.confusion[j][c];
    }
    if (actual + pred == 0) {
      r.warnings.push_back("class '" + class_names[c] +
                           "' has no true or predicted rows; F1 set to 0");
      r.per_class_f1[c] = 0.0;
    } else {
      r.per_class_f1[c] =
          2.0 * static_cast<double>(tp) / static_cast<double>(actual + pred);
    }
    sum += r.per_class_f1[c];
  }
  r.macro_f1 = sum / static_cast<double>(k);
  return r;
}

double macro_f1(std::span<const std::size_t> truth,
                std::span<const std::size_t> predicted, std::size_t num_classes) {
  std::vector<std::string> names(num_classes);
  return classification_report(truth, predicted, names).macro_f1;
}

namespace {

// Model class index for each test class.
std::vector<std::size_t> class_mapping(const Classifier& model,
                                       const std::vector<std::string>& test_classes) {
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < model.num_classes(); ++c) {
    index[model.class_names()[c]] = c;
  }
  std::vector<std::size_t> map;
  for (const auto& name : test_classes) {
    const auto it = index.find(name);
    if (it == index.end()) {
      throw EvalError("test class '" + name + "' is unknown to the model");
    }
    map.push_back(it->second);
  }
  return map;
}

std::vector<std::size_t> predict_all(const Classifier& model,
                                     const std::vector<LabeledRow>& rows) {
  std::vector<std::size_t> out(rows.size());
  parallel_for(rows.size(), [&](std::size_t i) { out[i] = model.predict(rows[i].x); });
  return out;
}

void check_ks(std::span<const std::int64_t> ks) {
  for (auto k : ks) {
    if (k <= 0) throw ConfigError("truncation length must be positive, got " +
                                  std::to_string(k));
  }
}

std::vector<Trace> truncate_all(std::span<const Trace> traces, std::int64_t k) {
  std::vector<Trace> out(traces.size());
  parallel_for(traces.size(), [&](std::size_t i) {
    out[i] = truncate_trace(traces[i], static_cast<std::size_t>(k));
  });
  return out;
}

}  // namespace

ClosedSetReport closed_set_eval(const Classifier& model, const LabeledDataset& test) {
  if (test.rows.empty()) throw EvalError("empty test set");
  const auto mapping = class_mapping(model, test.class_names);
  std::vector<std::size_t> truth;
  for (const auto& r : test.rows) truth.push_back(mapping[r.label]);
  const auto pred = predict_all(model, test.rows);
  return classification_report(truth, pred, model.class_names());
}

double auroc(std::span<const double> unknown_scores,
             std::span<const double> known_scores) {
  if (unknown_scores.empty() || known_scores.empty()) {
    throw EvalError("AUROC needs both unknown and known scores");
  }
  struct Item {
    double score;
    bool unknown;
  };
  std::vector<Item> all;
  all.reserve(unknown_scores.size() + known_scores.size());
  for (double s : unknown_scores) all.push_back({s, true});
  for (double s : known_scores) all.push_back({s, false});
  std::sort(all.begin(), all.end(),
            [](const Item& a, const Item& b) { return a.score < b.score; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    std::size_t unknown_in_run = 0;
    while (j < all.size() && all[j].score == all[i].score) {
      if (all[j].unknown) ++unknown_in_run;
      ++j;
    }
    // ranks i+1 .. j averaged
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += avg * static_cast<double>(unknown_in_run);
    i = j;
  }
  const auto nu = static_cast<double>(unknown_scores.size());
  const auto nk = static_cast<double>(known_scores.size());
  return (rank_sum - nu * (nu + 1.0) / 2.0) / (nu * nk);
}

OpenSetResult open_set_loo(const LabeledDataset& train, const LabeledDataset& test,
                           const std::string& heldout, const Trainer& trainer,
                           std::uint64_t seed) {
  auto find = [&heldout](const LabeledDataset& d) {
    const auto it = std::find(d.class_names.begin(), d.class_names.end(), heldout);
    if (it == d.class_names.end()) {
      throw ConfigError("held-out agent '" + heldout + "' is not in the dataset");
    }
    return static_cast<std::size_t>(it - d.class_names.begin());
  };
  const std::size_t h_train = find(train);
  const std::size_t h_test = find(test);

  LabeledDataset known;
  known.split = Split::Train;
  std::vector<std::size_t> remap(train.num_classes(), 0);
  for (std::size_t c = 0; c < train.num_classes(); ++c) {
    if (c == h_train) continue;
    remap[c] = known.class_names.size();
    known.class_names.push_back(train.class_names[c]);
  }
  std::vector<const FeatureVector*> unknown_rows;
  for (const auto& r : train.rows) {
    if (r.label == h_train) {
      unknown_rows.push_back(&r.x);
    } else {
      known.rows.push_back({r.x, remap[r.label], r.episode_id});
    }
  }
  std::vector<const FeatureVector*> known_rows;
  for (const auto& r : test.rows) {
    (r.label == h_test ? unknown_rows : known_rows).push_back(&r.x);
  }

  const auto model = trainer(known, seed);
  auto score = [&model](const std::vector<const FeatureVector*>& rows) {
    std::vector<double> s(rows.size());
    parallel_for(rows.size(), [&](std::size_t i) {
      const auto p = model->predict_proba(*rows[i]);
      s[i] = 1.0 - *std::max_element(p.begin(), p.end());
    });
    return s;
  };
  const auto su = score(unknown_rows);
  const auto sk = score(known_rows);
  return {heldout, auroc(su, sk), sk.size(), su.size()};
}

std::vector<OpenSetResult> open_set_report(const LabeledDataset& train,
                                           const LabeledDataset& test,
                                           const Trainer& trainer,
                                           std::uint64_t seed) {
  std::vector<OpenSetResult> out;
  for (const auto& name : train.class_names) {
    out.push_back(open_set_loo(train, test, name, trainer, derive_seed(seed, name)));
  }
  return out;
}

std::vector<FeatureImportance> permutation_importance(const Classifier& model,
                                                      const LabeledDataset& test,
                                                      int repeats,
                                                      std::uint64_t seed) {
  if (repeats < 1) throw ConfigError("importance repeats must be at least 1");
  if (test.rows.empty()) throw EvalError("empty test set");
  const auto mapping = class_mapping(model, test.class_names);
  std::vector<std::size_t> truth;
  for (const auto& r : test.rows) truth.push_back(mapping[r.label]);
  const auto base_pred = predict_all(model, test.rows);
  const double base = macro_f1(truth, base_pred, model.num_classes());

  const auto reps = static_cast<std::size_t>(repeats);
  std::vector<double> drops(kFeatureCount * reps, 0.0);
  parallel_for(drops.size(), [&](std::size_t job) {
    const std::size_t f = job / reps;
    const std::size_t r = job % reps;
    std::vector<double> column;
    for (const auto& row : test.rows) column.push_back(row.x[f]);
    Rng rng(derive_seed(derive_seed(seed, f), r));
    std::shuffle(column.begin(), column.end(), rng);
    std::vector<std::size_t> pred(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      FeatureVector x = test.rows[i].x;
      x[f] = column[i];
      pred[i] = model.predict(x);
    }
    drops[job] = base - macro_f1(truth, pred, model.num_classes());
  });

  std::vector<FeatureImportance> out(kFeatureCount);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    double sum = 0.0;
    for (std::size_t r = 0; r < reps; ++r) sum += drops[f * reps + r];
    const double mean = sum / static_cast<double>(reps);
    double ss = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const double d = drops[f * reps + r] - mean;
      ss += d * d;
    }
    out[f] = {f, mean, std::sqrt(ss / static_cast<double>(reps))};
  }
  return out;
}

std::vector<std::size_t> importance_ranking(std::span<const FeatureImportance> imp) {
  std::vector<std::size_t> order(imp.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&imp](std::size_t a, std::size_t b) {
    return imp[a].mean_drop > imp[b].mean_drop;
  });
  for (auto& o : order) o = imp[o].feature;
  return order;
}

Curve training_fraction_curve(const LabeledDataset& train,
                              const LabeledDataset& test,
                              std::span<const double> fractions,
                              const Trainer& trainer, std::uint64_t seed) {
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) {
      throw ConfigError("training fraction must lie in (0, 1]");
    }
  }
  // Per-row position in its class's shuffled order.
  std::vector<std::vector<std::size_t>> by_class(train.num_classes());
  for (std::size_t i = 0; i < train.size(); ++i) {
    by_class[train.rows[i].label].push_back(i);
  }
  Rng rng(derive_seed(seed, "fraction"));
  std::vector<std::size_t> position(train.size());
  for (auto& rows : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t j = 0; j < rows.size(); ++j) position[rows[j]] = j;
  }

  Curve curve;
  for (double f : fractions) {
    std::vector<std::size_t> keep(train.num_classes());
    bool empty_class = false;
    for (std::size_t c = 0; c < keep.size(); ++c) {
      keep[c] = static_cast<std::size_t>(
          std::llround(f * static_cast<double>(by_class[c].size())));
      if (keep[c] == 0) empty_class = true;
    }
    char label[32];
    std::snprintf(label, sizeof label, "%g", f);
    if (empty_class) {
      curve.warnings.push_back(std::string("fraction ") + label +
                               " leaves a class without rows; skipped");
      continue;
    }
    LabeledDataset subset;
    subset.class_names = train.class_names;
    subset.split = train.split;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (position[i] < keep[train.rows[i].label]) subset.rows.push_back(train.rows[i]);
    }
    ClassifierPtr model;
    try {
      model = trainer(subset, seed);
    } catch (const TrainError& e) {
      curve.warnings.push_back(std::string("fraction ") + label +
                               " skipped: " + e.what());
      continue;
    }
    curve.points.push_back({f, closed_set_eval(*model, test).macro_f1});
  }
  return curve;
}

Curve truncation_curve_test_side(const Classifier& model,
                                 std::span<const Trace> test,
                                 std::span<const std::int64_t> ks) {
  check_ks(ks);
  Curve curve;
  for (auto k : ks) {
    const auto cut = truncate_all(test, k);
    const auto data = featurize(cut, model.class_names(), Split::Test);
    curve.points.push_back({static_cast<double>(k), closed_set_eval(model, data).macro_f1});
  }
  return curve;
}

Curve truncation_curve_train_side(std::span<const Trace> train,
                                  std::span<const Trace> test,
                                  const std::vector<std::string>& class_names,
                                  std::span<const std::int64_t> ks,
                                  const Trainer& trainer, std::uint64_t seed) {
  check_ks(ks);
  const auto test_data = featurize(test, class_names, Split::Test);
  Curve curve;
  for (auto k : ks) {
    const auto cut = truncate_all(train, k);
    const auto model = trainer(featurize(cut, class_names, Split::Train), seed);
    curve.points.push_back(
        {static_cast<double>(k), closed_set_eval(*model, test_data).macro_f1});
  }
  return curve;
}

ordered_json to_json(const ClosedSetReport& report) {
  ordered_json per_class = ordered_json::object();
  for (std::size_t c = 0; c < report.class_names.size(); ++c) {
    per_class[report.class_names[c]] = report.per_class_f1[c];
  }
  return {{"macro_f1", report.macro_f1},
          {"accuracy", report.accuracy},
          {"per_class_f1", per_class},
          {"class_names", report.class_names},
          {"confusion", report.confusion},
          {"warnings", report.warnings}};
}

ordered_json to_json(std::span<const OpenSetResult> results) {
  ordered_json per = ordered_json::object();
  ordered_json detail = ordered_json::array();
  double sum = 0.0;
  for (const auto& r : results) {
    per[r.heldout] = r.auroc;
    detail.push_back({{"heldout", r.heldout},
                      {"auroc", r.auroc},
                      {"n_known", r.n_known},
                      {"n_unknown", r.n_unknown}});
    sum += r.auroc;
  }
  ordered_json j;
  j["per_heldout_auroc"] = per;
  j["mean_auroc"] = results.empty() ? 0.0 : sum / static_cast<double>(results.size());
  j["runs"] = detail;
  return j;
}

ordered_json to_json(std::span<const FeatureImportance> imp) {
  ordered_json out = ordered_json::array();
  for (std::size_t f : importance_ranking(imp)) {
    const auto it = std::find_if(imp.begin(), imp.end(),
                                 [f](const FeatureImportance& i) { return i.feature == f; });
    out.push_back({{"feature", std::string(kFeatureNames[f])},
                   {"family", std::string(to_string(feature_family(f)))},
                   {"mean_drop", it->mean_drop},
                   {"std_drop", it->std_drop}});
  }
  return out;
}

ordered_json to_json(const Curve& curve, const std::string& x_name) {
  ordered_json pts = ordered_json::array();
  for (const auto& p : curve.points) pts.push_back({{x_name, p.x}, {"macro_f1", p.macro_f1}});
  return {{"points", pts}, {"warnings", curve.warnings}};
}

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Left-aligned first column, right-aligned others.
std::string render(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    if (width.size() < r.size()) width.resize(r.size(), 0);
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      const std::string pad(width[c] - r[c].size(), ' ');
      if (c > 0) out << "  ";
      out << (c == 0 ? r[c] + pad : pad + r[c]);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

std::string format_table(const ClosedSetReport& report) {
  std::vector<std::vector<std::string>> rows = {{"agent", "f1", "support"}};
  for (std::size_t c = 0; c < report.class_names.size(); ++c) {
    std::size_t support = 0;
    for (auto v : report.confusion[c]) support += v;
    rows.push_back({report.class_names[c], fixed(report.per_class_f1[c]),
                    std::to_string(support)});
  }
  rows.push_back({"macro", fixed(report.macro_f1), ""});
  rows.push_back({"accuracy", fixed(report.accuracy), ""});
  return render(rows);
}

std::string format_table(std::span<const OpenSetResult> results) {
  std::vector<std::vector<std::string>> rows = {{"heldout", "auroc", "known", "unknown"}};
  for (const auto& r : results) {
    rows.push_back({r.heldout, fixed(r.auroc), std::to_string(r.n_known),
                    std::to_string(r.n_unknown)});
  }
  return render(rows);
}

std::string format_table(std::span<const FeatureImportance> imp) {
  std::vector<std::vector<std::string>> rows = {{"feature", "family", "mean_drop", "std"}};
  for (std::size_t f : importance_ranking(imp)) {
    const auto it = std::find_if(imp.begin(), imp.end(),
                                 [f](const FeatureImportance& i) { return i.feature == f; });
    rows.push_back({std::string(kFeatureNames[f]),
                    std::string(to_string(feature_family(f))), fixed(it->mean_drop),
                    fixed(it->std_drop)});
  }
  return render(rows);
}

std::string format_table(const Curve& curve, const std::string& x_name) {
  std::vector<std::vector<std::string>> rows = {{x_name, "macro_f1"}};
  for (const auto& p : curve.points) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", p.x);
    rows.push_back({buf, fixed(p.macro_f1)});
  }
  return render(rows);
}

}  // namespace agentfp
