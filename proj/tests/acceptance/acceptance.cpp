// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "agentfp/error.hpp"
#include "agentfp/evaluation.hpp"
#include "agentfp/features.hpp"
#include "agentfp/gbt.hpp"
#include "agentfp/ingest.hpp"
#include "agentfp/perturbation.hpp"
#include "agentfp/search.hpp"
#include "agentfp/simulator.hpp"
#include "json.hpp"
#include "../support/reference_features.hpp"
#include "../support/test_util.hpp"

using namespace agentfp;

namespace {

constexpr std::uint64_t kSeed = 7;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

GbtConfig fixed_gbt() {
  GbtConfig c;
  c.n_estimators = 200;
  c.learning_rate = 0.1;
  c.max_depth = 4;
  c.subsample = 0.8;
  c.colsample_bytree = 0.8;
  return c;
}

struct Corpus {
  TraceSplits traces;
  std::vector<std::string> names;
  LabeledDataset train;
  LabeledDataset test;
};

Corpus load(const std::string& suite, EpisodeCounts counts) {
  Corpus c;
  const auto sim = simulate_corpus(preset_suite(suite), counts, kSeed);
  c.traces = split_traces(sim.traces, sim.manifest);
  c.names = class_names_of(sim.traces);
  c.train = featurize(c.traces.train, c.names, Split::Train);
  c.test = featurize(c.traces.test, c.names, Split::Test);
  return c;
}

// separable14 at (50, 25, 25) and the model picked by the 40-draw search;
// shared by the closed-set and truncation checks.
struct Separable {
  Corpus corpus;
  ClassifierPtr model;
  double search_seconds = 0.0;
};

const Separable& separable() {
  static const Separable s = [] {
    Separable out;
    out.corpus = load("separable14", {50, 25, 25});
    const auto start = std::chrono::steady_clock::now();
    const auto res = cross_validated_search(
        out.corpus.train, gbt_random_space(kGbtSearchDraws, kSeed), kSeed);
    out.search_seconds = seconds_since(start);
    out.model = res.model;
    return out;
  }();
  return s;
}

Outcome feature_oracle() {
  const auto traces = testutil::random_sim_traces(1000, 2024);
  const auto start = std::chrono::steady_clock::now();
  std::size_t mismatches = 0;
  for (const auto& t : traces) {
    const auto f = extract_features(t);
    const auto r = reference::features(t);
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      const bool ok = is_count_feature(i) ? f[i] == r[i] : testutil::close_rel(f[i], r[i]);
      mismatches += ok ? 0 : 1;
    }
  }
  const double secs = seconds_since(start);
  return {mismatches == 0 && secs < 10.0,
          fmt("1000 traces, %zu mismatches, %.2f s", mismatches, secs)};
}

Outcome closed_set() {
  const auto start = std::chrono::steady_clock::now();
  const auto& s = separable();
  const auto r = closed_set_eval(*s.model, s.corpus.test);
  const double secs = seconds_since(start);
  return {r.macro_f1 >= 0.90 && secs < 600.0,
          fmt("macro F1 %.4f, search %.1f s, total %.1f s", r.macro_f1, s.search_seconds,
              secs)};
}

Outcome random_baseline() {
  Rng rng(kSeed);
  std::vector<std::size_t> truth, pred;
  for (std::size_t i = 0; i < 14 * 75; ++i) {
    truth.push_back(i % 14);
    pred.push_back(rng() % 14);
  }
  const double f1 = macro_f1(truth, pred, 14);
  return {f1 >= 0.04 && f1 <= 0.10, fmt("macro F1 %.4f", f1)};
}

Outcome open_set() {
  Rng rng(42);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t nu = 1 + rng() % 40;
    const std::size_t nk = 1 + rng() % 40;
    const int levels = 1 + static_cast<int>(rng() % 8);
    std::vector<double> u(nu), k(nk);
    for (auto& v : u) v = static_cast<double>(rng() % levels) / levels;
    for (auto& v : k) v = static_cast<double>(rng() % (levels + 2)) / levels;
    double wins = 0;
    for (double a : u) {
      for (double b : k) wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
    }
    const double oracle = wins / static_cast<double>(nu * nk);
    worst = std::max(worst, std::abs(auroc(u, k) - oracle));
  }
  const auto trainer = fixed_trainer(fixed_gbt());
  const auto clone = load("clone-pair", {100, 0, 100});
  const auto c = open_set_loo(clone.train, clone.test, "pair-00-clone", trainer, kSeed);
  const auto extreme = load("extreme", {100, 0, 100});
  const auto e = open_set_loo(extreme.train, extreme.test, "agent-extreme", trainer, kSeed);
  return {worst <= 1e-9 && c.auroc >= 0.40 && c.auroc <= 0.60 && e.auroc >= 0.95,
          fmt("oracle max err %.2g, clone AUROC %.4f, extreme AUROC %.4f", worst, c.auroc,
              e.auroc)};
}

Outcome delay_attack() {
  const auto& c = separable().corpus;
  const std::vector<std::int64_t> budgets = {5000};
  const auto t = delay_robustness_experiment(c.traces.train, c.traces.test, c.names, budgets,
                                             fixed_trainer(fixed_gbt()), kSeed);
  const auto& row = t.rows.front();
  return {row.unadapted_f1 <= t.clean_f1 - 0.15 && row.adapted_f1 >= t.clean_f1 - 0.10,
          fmt("clean %.4f, unadapted %.4f, adapted %.4f at 5000 ms", t.clean_f1,
              row.unadapted_f1, row.adapted_f1)};
}

Outcome perturbation_invariants() {
  const auto traces = testutil::random_sim_traces(100, 77);
  std::size_t timing = 0;
  for (std::size_t k = 0; k < kFeatureCount; ++k) timing += is_timing_feature(k) ? 1 : 0;
  std::size_t changed = 0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto f = extract_features(traces[i]);
    const auto h = extract_features(inject_delays(traces[i], DelayBudget(5000), i));
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      if (is_timing_feature(k)) continue;
      const double a = f[k], b = h[k];
      changed += std::memcmp(&a, &b, sizeof a) == 0 ? 0 : 1;
    }
  }
  return {timing == 15 && changed == 0,
          fmt("%zu timing features, %zu non-timing values changed over 100 traces", timing,
              changed)};
}

Outcome truncation() {
  const auto& s = separable();
  const auto& test = s.corpus.traces.test;
  double mean_len = 0;
  for (const auto& t : test) mean_len += static_cast<double>(t.size());
  mean_len /= static_cast<double>(test.size());
  const auto k40 = static_cast<std::int64_t>(std::ceil(0.4 * mean_len));
  std::vector<std::int64_t> ks;
  for (std::int64_t k = 1; k <= static_cast<std::int64_t>(1.5 * mean_len); k += k < 10 ? 1 : 4) {
    ks.push_back(k);
  }
  const auto curve = truncation_curve_test_side(*s.model, test, ks);
  const double full = closed_set_eval(*s.model, s.corpus.test).macro_f1;
  double worst_dip = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    worst_dip = std::max(worst_dip, curve.points[i - 1].macro_f1 - curve.points[i].macro_f1);
  }
  const std::vector<std::int64_t> at = {k40};
  const double f40 = truncation_curve_test_side(*s.model, test, at).points.front().macro_f1;
  return {worst_dip <= 0.02 && f40 >= full - 0.03,
          fmt("%zu points, worst dip %.4f, F1 %.4f at k=%lld vs full %.4f", curve.points.size(),
              worst_dip, f40, static_cast<long long>(k40), full)};
}

std::string top3(const Corpus& c, const std::function<bool(std::size_t)>& family,
                 bool& ok) {
  const auto model = fixed_trainer(fixed_gbt())(c.train, kSeed);
  const auto rank = importance_ranking(permutation_importance(*model, c.test, 5, kSeed));
  std::string names;
  for (std::size_t i = 0; i < 3; ++i) {
    ok = ok && family(rank[i]);
    names += (i ? "," : "") + std::string(kFeatureNames[rank[i]]);
  }
  return names;
}

Outcome importance() {
  bool ok = true;
  const auto timing = top3(load("timing-only", {50, 0, 25}), is_timing_feature, ok);
  const auto action =
      top3(load("action-only", {50, 0, 25}), [](std::size_t k) { return !is_timing_feature(k); },
           ok);
  return {ok, "timing-only top3 " + timing + "; action-only top3 " + action};
}

Outcome gbt_numerics() {
  Rng rng(1);
  std::normal_distribution<double> z(0, 2);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + trial % 6;
    std::vector<double> logits(k);
    for (auto& v : logits) v = z(rng);
    const std::size_t y = rng() % k;
    std::vector<double> g(k), h(k), gu(k), gd(k), tmp(k);
    softmax_grad_hess(logits, y, g, h);
    const double eps = 1e-4;
    for (std::size_t c = 0; c < k; ++c) {
      auto up = logits, dn = logits;
      up[c] += eps;
      dn[c] -= eps;
      const double fd_g = (softmax_loss(up, y) - softmax_loss(dn, y)) / (2 * eps);
      softmax_grad_hess(up, y, gu, tmp);
      softmax_grad_hess(dn, y, gd, tmp);
      const double fd_h = (gu[c] - gd[c]) / (2 * eps);
      worst = std::max(worst, std::abs(fd_g - g[c]) / std::max(std::abs(g[c]), 1e-3));
      worst = std::max(worst, std::abs(fd_h - h[c]) / std::max(std::abs(h[c]), 1e-3));
    }
  }
  const auto& s = separable();
  double sum_err = 0.0;
  for (const auto* d : {&s.corpus.train, &s.corpus.test}) {
    for (const auto& r : d->rows) {
      double sum = 0;
      for (double p : s.model->predict_proba(r.x)) sum += p;
      sum_err = std::max(sum_err, std::abs(sum - 1.0));
    }
  }
  return {worst < 1e-3 && sum_err <= 1e-9,
          fmt("max finite-difference rel err %.2g, max |sum p - 1| %.2g", worst, sum_err)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs simulate, featurize, train and eval-closed through the CLI inside
// `root`, with relative paths so manifests do not depend on the location.
bool run_pipeline(const std::filesystem::path& root) {
  const std::string cd = "cd '" + root.string() + "' && '" + AGENTFP_CLI + "'";
  const std::vector<std::string> cmds = {
      " simulate --suite separable14 --episodes 10,0,5 --seed 3 --out sim",
      " featurize --corpus sim --out feat",
      " train --data feat --seed 3 --out train",
      " eval-closed --model-file train/model.json --data feat --out eval --emit-plot-data",
  };
  for (const auto& c : cmds) {
    if (std::system((cd + c + " > /dev/null").c_str()) != 0) return false;
  }
  return true;
}

nlohmann::json manifest_without_clock(const std::filesystem::path& p) {
  auto j = nlohmann::json::parse(slurp(p));
  j.erase("started_at");
  j.erase("finished_at");
  return j;
}

Outcome determinism() {
  const auto a = testutil::temp_dir("accept-a");
  const auto b = testutil::temp_dir("accept-b");
  if (!run_pipeline(a) || !run_pipeline(b)) return {false, "pipeline failed"};
  std::size_t compared = 0, differing = 0;
  for (const auto* step : {"sim", "feat", "train", "eval"}) {
    if (manifest_without_clock(a / step / "manifest.json") !=
        manifest_without_clock(b / step / "manifest.json")) {
      return {false, std::string("manifests differ at ") + step};
    }
    for (const auto& e : std::filesystem::directory_iterator(a / step)) {
      if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
      ++compared;
      differing += slurp(e.path()) == slurp(b / step / e.path().filename()) ? 0 : 1;
    }
  }
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
  return {compared > 0 && differing == 0,
          fmt("%zu output files compared, %zu differ", compared, differing)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"feature-oracle", feature_oracle},
      {"closed-set-separable14", closed_set},
      {"random-baseline", random_baseline},
      {"open-set-auroc", open_set},
      {"delay-attack-defense", delay_attack},
      {"perturbation-invariants", perturbation_invariants},
      {"truncation-curve", truncation},
      {"importance-attribution", importance},
      {"gbt-numerics", gbt_numerics},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
