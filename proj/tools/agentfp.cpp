// agentfp: command-line front end for the fingerprinting pipeline.
//
// Every subcommand writes its outputs and a manifest.json into --out.
// Exit status: 0 success, 1 runtime error (JSON on stderr), 2 usage error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "agentfp/error.hpp"
#include "agentfp/evaluation.hpp"
#include "agentfp/features.hpp"
#include "agentfp/ingest.hpp"
#include "agentfp/model_io.hpp"
#include "agentfp/parallel.hpp"
#include "agentfp/perturbation.hpp"
#include "agentfp/rng.hpp"
#include "agentfp/simulator.hpp"
#include "agentfp/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace agentfp;

namespace {

// ---------------------------------------------------------------------------
// Files and hashing

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Files hash their bytes; directories hash relative paths and bytes of every
// regular file below them except run manifests.
std::string input_hash(const fs::path& path) {
  if (fs::is_regular_file(path)) return hex64(fnv1a64(read_text(path)));
  if (!fs::is_directory(path)) throw IoError("no such input: " + path.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(path)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.json") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = fnv1a64("");
  for (const auto& f : files) {
    const auto rel = fs::relative(f, path).generic_string();
    h = splitmix64(h ^ fnv1a64(rel));
    h = splitmix64(h ^ fnv1a64(read_text(f)));
  }
  return hex64(h);
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Run bookkeeping

class Run {
 public:
  Run(std::string subcommand, fs::path out) : sub_(std::move(subcommand)), out_(std::move(out)) {
    started_ = utc_now();
    fs::create_directories(out_);
  }

  const fs::path& out() const { return out_; }
  ordered_json& config() { return config_; }
  void seed(std::uint64_t s) { seed_ = s; }
  void input(const std::string& role, const fs::path& path) {
    inputs_[role] = {{"path", path.generic_string()}, {"fnv1a64", input_hash(path)}};
  }

  void write_report(const ordered_json& body, const std::string& table) {
    ordered_json doc;
    doc["schema_version"] = kReportSchemaVersion;
    doc["subcommand"] = sub_;
    for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
    write_text(out_ / "report.json", doc.dump(2) + "\n");
    write_text(out_ / "report.txt", table);
    std::cout << table;
  }

  void finish() {
    ordered_json m;
    m["tool"] = "agentfp";
    m["version"] = kVersion;
    m["subcommand"] = sub_;
    m["config"] = config_;
    m["seed"] = seed_ ? ordered_json(*seed_) : ordered_json(nullptr);
    m["inputs"] = inputs_;
    m["started_at"] = started_;
    m["finished_at"] = utc_now();
    write_text(out_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  std::string sub_;
  fs::path out_;
  ordered_json config_ = ordered_json::object();
  ordered_json inputs_ = ordered_json::object();
  std::optional<std::uint64_t> seed_;
  std::string started_;
};

// ---------------------------------------------------------------------------
// Shared option groups

struct ModelChoice {
  std::string model = "gbt";
  bool search = false;
  std::string config_file;

  void add_to(CLI::App* app) {
    app->add_option("--model", model, "lr-l2, lr-l1, rf or gbt")
        ->check(CLI::IsMember({"lr-l2", "lr-l1", "rf", "gbt"}))
        ->capture_default_str();
    auto* s = app->add_flag("--search", search,
                            "select hyperparameters by 3-fold CV over the standard space");
    auto* c = app->add_option("--config", config_file,
                              "JSON file with fixed hyperparameters")
                  ->check(CLI::ExistingFile);
    s->excludes(c);
  }

  ModelKind kind() const {
    return parse_model_kind(model.rfind("lr", 0) == 0 ? "linear" : model);
  }

  // The config file is read once so pipes and process substitution work.
  const std::string& config_text() const {
    if (!config_text_) config_text_ = config_file.empty() ? "{}" : read_text(config_file);
    return *config_text_;
  }

  ModelConfig fixed_config() const {
    json j;
    try {
      j = json::parse(config_text());
    } catch (const json::parse_error& e) {
      throw ConfigError(config_file + ": " + e.what());
    }
    auto cfg = config_from_json(j, kind());
    if (auto* lc = std::get_if<LinearConfig>(&cfg); lc && !j.contains("penalty")) {
      lc->penalty = model == "lr-l1" ? Penalty::L1 : Penalty::L2;
    }
    return cfg;
  }

  SearchSpace space(std::uint64_t seed) const {
    switch (kind()) {
      case ModelKind::Linear:
        return linear_grid(model == "lr-l1" ? Penalty::L1 : Penalty::L2);
      case ModelKind::Forest:
        return forest_grid();
      case ModelKind::Gbt:
        break;
    }
    return gbt_random_space(kGbtSearchDraws, derive_seed(seed, "gbt-space"));
  }

  Trainer trainer(std::uint64_t seed) const {
    return search ? search_trainer(space(seed)) : fixed_trainer(fixed_config());
  }

  ordered_json describe() const {
    ordered_json j = {{"model", model}, {"search", search}};
    if (!search) j["hyperparameters"] = config_to_json(fixed_config());
    if (!config_file.empty()) {
      j["config_file"] = {{"path", config_file}, {"fnv1a64", hex64(fnv1a64(config_text()))}};
    }
    return j;
  }

 private:
  mutable std::optional<std::string> config_text_;
};

std::vector<std::string> read_classes(const fs::path& data_dir) {
  const auto j = json::parse(read_text(data_dir / "classes.json"));
  return j.at("class_names").get<std::vector<std::string>>();
}

LabeledDataset read_split(const fs::path& data_dir, Split split) {
  const auto classes = read_classes(data_dir);
  const auto path = data_dir / (std::string(to_string(split)) + ".csv");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_dataset_csv(in, split, classes);
}

fs::path default_splits(const fs::path& corpus, const std::string& given) {
  return given.empty() ? corpus / "splits.json" : fs::path(given);
}

TraceSplits load_trace_splits(const fs::path& corpus, const fs::path& splits,
                              std::vector<std::string>* classes) {
  auto scan = scan_corpus(corpus);
  for (const auto& e : scan.errors) {
    std::cerr << "warning: skipped " << e.path.string() << ": " << e.message << "\n";
  }
  if (scan.traces.empty()) throw ConfigError("no readable episodes under " + corpus.string());
  *classes = class_names_of(scan.traces);
  return split_traces(scan.traces, read_split_manifest(splits));
}

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Subcommands

struct Common {
  std::string out;
  std::uint64_t seed = 0;
  bool emit_plot_data = false;
};

void cmd_simulate(const Common& c, const std::string& suite, const std::string& profiles_file,
                  const std::vector<std::size_t>& episodes) {
  if (suite.empty() == profiles_file.empty()) {
    throw CLI::ValidationError("simulate", "give exactly one of --suite or --profiles");
  }
  Run run("simulate", c.out);
  run.seed(c.seed);
  std::vector<AgentProfile> profiles;
  if (!suite.empty()) {
    profiles = preset_suite(suite);
    run.config()["suite"] = suite;
  } else {
    run.input("profiles", profiles_file);
    profiles = load_profiles(profiles_file);
  }
  const EpisodeCounts counts{episodes.at(0), episodes.at(1), episodes.at(2)};
  run.config()["episodes"] = {{"train", counts.train}, {"val", counts.val}, {"test", counts.test}};
  const auto n = generate_corpus(profiles, counts, c.seed, c.out);
  save_profiles(fs::path(c.out) / "profiles.yaml", profiles);
  std::cout << "wrote " << n << " episodes for " << profiles.size() << " agents to "
            << c.out << "\n";
  run.finish();
}

void cmd_ingest(const Common& c, const std::string& corpus, const std::string& dataset,
                bool released) {
  Run run("ingest", c.out);
  run.input("corpus", corpus);
  run.config()["dataset"] = dataset.empty() ? ordered_json(nullptr) : ordered_json(dataset);
  run.config()["format"] = released ? "released" : "native";
  const auto scan = scan_corpus(corpus, dataset.empty() ? std::nullopt
                                                        : std::optional<std::string>(dataset),
                                released ? EpisodeFormat::Released : EpisodeFormat::Native);
  std::map<std::string, std::size_t> per_agent;
  std::size_t events = 0;
  for (const auto& t : scan.traces) {
    ++per_agent[t.meta().agent_id];
    events += t.size();
  }
  ordered_json errors = ordered_json::array();
  for (const auto& e : scan.errors) {
    errors.push_back({{"path", fs::relative(e.path, corpus).generic_string()},
                      {"message", e.message}});
  }
  ordered_json body = {{"episodes", scan.traces.size()},
                       {"events", events},
                       {"per_agent", per_agent},
                       {"errors", errors},
                       {"warnings", scan.warnings}};
  std::ostringstream table;
  table << "episodes  " << scan.traces.size() << "\nevents    " << events
        << "\nerrors    " << scan.errors.size() << "\nwarnings  " << scan.warnings.size()
        << "\n";
  for (const auto& [agent, n] : per_agent) table << "  " << agent << "  " << n << "\n";
  for (const auto& e : scan.errors) {
    table << "error: " << e.path.string() << ": " << e.message << "\n";
  }
  run.write_report(body, table.str());
  run.finish();
}

void cmd_featurize(const Common& c, const std::string& corpus, const std::string& splits_arg) {
  Run run("featurize", c.out);
  const auto splits = default_splits(corpus, splits_arg);
  run.input("corpus", corpus);
  run.input("splits", splits);
  std::vector<std::string> classes;
  const auto ts = load_trace_splits(corpus, splits, &classes);
  for (auto [split, traces] : {std::pair{Split::Train, &ts.train},
                               std::pair{Split::Val, &ts.val},
                               std::pair{Split::Test, &ts.test}}) {
    const auto data = featurize(*traces, classes, split);
    std::ofstream out(fs::path(c.out) / (std::string(to_string(split)) + ".csv"),
                      std::ios::binary);
    write_dataset_csv(out, data);
    std::cout << to_string(split) << ": " << data.size() << " rows\n";
  }
  ordered_json cls = {{"class_names", classes},
                      {"feature_catalog_hash", hex64(feature_catalog_hash())}};
  write_text(fs::path(c.out) / "classes.json", cls.dump(2) + "\n");
  run.finish();
}

void cmd_train(const Common& c, const std::string& data_dir, const ModelChoice& mc) {
  Run run("train", c.out);
  run.seed(c.seed);
  run.input("train", fs::path(data_dir) / "train.csv");
  run.config()["model"] = mc.describe();
  const auto train = read_split(data_dir, Split::Train);
  ordered_json info;
  ClassifierPtr model;
  if (mc.search) {
    const auto space = mc.space(c.seed);
    const auto res = cross_validated_search(train, space, c.seed);
    model = res.model;
    ordered_json cands = ordered_json::array();
    for (std::size_t i = 0; i < space.candidates.size(); ++i) {
      cands.push_back({{"config", config_to_json(space.candidates[i])},
                       {"mean_cv_accuracy", res.mean_accuracy[i]}});
    }
    info = {{"search", true},
            {"folds", space.folds},
            {"fits", res.fits},
            {"best_index", res.best_index},
            {"best_config", config_to_json(res.best)},
            {"candidates", cands}};
    std::cout << "cv fits: " << res.fits << ", best candidate " << res.best_index
              << " (mean accuracy " << res.mean_accuracy[res.best_index] << ")\n";
  } else {
    const auto cfg = mc.fixed_config();
    model = train_model(train, cfg, c.seed);
    info = {{"search", false}, {"best_config", config_to_json(cfg)}};
  }
  info["kind"] = to_string(model->kind());
  info["class_names"] = model->class_names();
  info["train_rows"] = train.size();
  save_model(fs::path(c.out) / "model.json", *model);
  write_text(fs::path(c.out) / "train.json", info.dump(2) + "\n");
  std::cout << "model written to " << (fs::path(c.out) / "model.json").string() << "\n";
  run.finish();
}

Split parse_split_arg(const std::string& s) {
  const auto split = parse_split(s);
  if (!split) throw ConfigError("unknown split '" + s + "'");
  return *split;
}

void cmd_eval_closed(const Common& c, const std::string& model_path,
                     const std::string& data_dir, const std::string& split_name) {
  Run run("eval-closed", c.out);
  const auto split = parse_split_arg(split_name);
  run.input("model", model_path);
  run.input("data", fs::path(data_dir) / (split_name + ".csv"));
  run.config()["split"] = split_name;
  const auto model = load_model(model_path);
  const auto data = read_split(data_dir, split);
  const auto rep = closed_set_eval(*model, data);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  run.write_report({{"closed_set", to_json(rep)}}, format_table(rep));
  if (c.emit_plot_data) {
    std::ostringstream csv;
    csv << "truth";
    for (const auto& n : rep.class_names) csv << ',' << n;
    csv << '\n';
    for (std::size_t i = 0; i < rep.class_names.size(); ++i) {
      csv << rep.class_names[i];
      for (auto v : rep.confusion[i]) csv << ',' << v;
      csv << '\n';
    }
    write_text(fs::path(c.out) / "confusion.csv", csv.str());
  }
  run.finish();
}

void cmd_eval_open(const Common& c, const std::string& data_dir,
                   const std::vector<std::string>& heldout, const ModelChoice& mc) {
  Run run("eval-open", c.out);
  run.seed(c.seed);
  run.input("train", fs::path(data_dir) / "train.csv");
  run.input("test", fs::path(data_dir) / "test.csv");
  run.config()["model"] = mc.describe();
  run.config()["heldout"] = heldout;
  const auto train = read_split(data_dir, Split::Train);
  const auto test = read_split(data_dir, Split::Test);
  const auto trainer = mc.trainer(c.seed);
  std::vector<OpenSetResult> results;
  if (heldout.empty()) {
    results = open_set_report(train, test, trainer, c.seed);
  } else {
    for (const auto& h : heldout) {
      results.push_back(open_set_loo(train, test, h, trainer, derive_seed(c.seed, h)));
    }
  }
  run.write_report({{"open_set", to_json(results)}}, format_table(results));
  if (c.emit_plot_data) {
    std::ostringstream csv;
    csv << "heldout,auroc\n";
    for (const auto& r : results) csv << r.heldout << ',' << csv_number(r.auroc) << '\n';
    write_text(fs::path(c.out) / "auroc.csv", csv.str());
  }
  run.finish();
}

void cmd_importance(const Common& c, const std::string& model_path,
                    const std::string& data_dir, const std::string& split_name, int repeats) {
  Run run("importance", c.out);
  run.seed(c.seed);
  const auto split = parse_split_arg(split_name);
  run.input("model", model_path);
  run.input("data", fs::path(data_dir) / (split_name + ".csv"));
  run.config()["split"] = split_name;
  run.config()["repeats"] = repeats;
  const auto model = load_model(model_path);
  const auto data = read_split(data_dir, split);
  const auto imp = permutation_importance(*model, data, repeats, c.seed);
  run.write_report({{"importance", to_json(imp)}}, format_table(imp));
  if (c.emit_plot_data) {
    std::ostringstream csv;
    csv << "feature,family,mean_drop,std_drop\n";
    for (std::size_t f : importance_ranking(imp)) {
      csv << kFeatureNames[f] << ',' << to_string(feature_family(f)) << ','
          << csv_number(imp[f].mean_drop) << ',' << csv_number(imp[f].std_drop) << '\n';
    }
    write_text(fs::path(c.out) / "importance.csv", csv.str());
  }
  run.finish();
}

struct CurveArgs {
  std::string kind;
  std::string data;
  std::string corpus;
  std::string splits;
  std::string model_file;
  std::string mode = "test_side";
  std::vector<double> fractions = {0.1, 0.2, 1.0 / 3.0, 0.5, 0.75, 1.0};
  std::vector<std::int64_t> ks;
  std::vector<std::int64_t> budgets = {500, 1000, 2000, 5000};
};

void write_curve_csv(const fs::path& path, const Curve& curve, const std::string& x) {
  std::ostringstream csv;
  csv << x << ",macro_f1\n";
  for (const auto& p : curve.points) csv << csv_number(p.x) << ',' << csv_number(p.macro_f1) << '\n';
  write_text(path, csv.str());
}

void cmd_curves(const Common& c, const CurveArgs& a, const ModelChoice& mc) {
  Run run("curves", c.out);
  run.seed(c.seed);
  run.config()["kind"] = a.kind;
  if (a.kind == "fraction") {
    if (a.data.empty()) throw CLI::ValidationError("curves", "--data is required for fraction");
    run.input("train", fs::path(a.data) / "train.csv");
    run.input("test", fs::path(a.data) / "test.csv");
    run.config()["fractions"] = a.fractions;
    run.config()["model"] = mc.describe();
    const auto train = read_split(a.data, Split::Train);
    const auto test = read_split(a.data, Split::Test);
    const auto curve = training_fraction_curve(train, test, a.fractions, mc.trainer(c.seed), c.seed);
    for (const auto& w : curve.warnings) std::cerr << "warning: " << w << "\n";
    run.write_report({{"training_fraction", to_json(curve, "fraction")}},
                     format_table(curve, "fraction"));
    if (c.emit_plot_data) write_curve_csv(fs::path(c.out) / "curve.csv", curve, "fraction");
    run.finish();
    return;
  }

  if (a.corpus.empty()) throw CLI::ValidationError("curves", "--corpus is required for " + a.kind);
  const auto splits = default_splits(a.corpus, a.splits);
  run.input("corpus", a.corpus);
  run.input("splits", splits);
  std::vector<std::string> classes;
  const auto ts = load_trace_splits(a.corpus, splits, &classes);

  if (a.kind == "truncation") {
    if (a.ks.empty()) throw CLI::ValidationError("curves", "--ks is required for truncation");
    run.config()["mode"] = a.mode;
    run.config()["ks"] = a.ks;
    Curve curve;
    if (a.mode == "test_side") {
      if (a.model_file.empty()) {
        throw CLI::ValidationError("curves", "--model-file is required for test_side");
      }
      run.input("model", a.model_file);
      const auto model = load_model(a.model_file);
      curve = truncation_curve_test_side(*model, ts.test, a.ks);
    } else {
      if (!a.model_file.empty()) {
        throw CLI::ValidationError("curves", "--model-file conflicts with train_side");
      }
      run.config()["model"] = mc.describe();
      curve = truncation_curve_train_side(ts.train, ts.test, classes, a.ks,
                                          mc.trainer(c.seed), c.seed);
    }
    double mean_len = 0.0;
    for (const auto& t : ts.test) mean_len += static_cast<double>(t.size());
    mean_len /= static_cast<double>(std::max<std::size_t>(1, ts.test.size()));
    auto body = to_json(curve, "k");
    body["mode"] = a.mode;
    body["mean_test_length"] = mean_len;
    run.write_report({{"truncation", body}}, format_table(curve, "k"));
    if (c.emit_plot_data) write_curve_csv(fs::path(c.out) / "curve.csv", curve, "k");
  } else {
    run.config()["budgets_ms"] = a.budgets;
    run.config()["model"] = mc.describe();
    const auto table = delay_robustness_experiment(ts.train, ts.test, classes, a.budgets,
                                                   mc.trainer(c.seed), c.seed);
    run.write_report({{"delay", to_json(table)}}, format_table(table));
    if (c.emit_plot_data) {
      std::ostringstream csv;
      csv << "budget_ms,unadapted_f1,adapted_f1\n";
      csv << "0," << csv_number(table.clean_f1) << ',' << csv_number(table.clean_f1) << '\n';
      for (const auto& r : table.rows) {
        csv << r.budget_ms << ',' << csv_number(r.unadapted_f1) << ','
            << csv_number(r.adapted_f1) << '\n';
      }
      write_text(fs::path(c.out) / "curve.csv", csv.str());
    }
  }
  run.finish();
}

void cmd_perturb(const Common& c, const std::string& corpus, std::int64_t budget_ms) {
  if (fs::weakly_canonical(corpus) == fs::weakly_canonical(c.out)) {
    throw CLI::ValidationError("perturb", "--out must differ from --corpus");
  }
  Run run("perturb", c.out);
  run.seed(c.seed);
  run.input("corpus", corpus);
  run.config()["budget_ms"] = budget_ms;
  const DelayBudget budget(budget_ms);
  const auto scan = scan_corpus(corpus);
  for (const auto& e : scan.errors) {
    std::cerr << "warning: skipped " << e.path.string() << ": " << e.message << "\n";
  }
  const auto delayed = inject_delays(scan.traces, budget, c.seed);
  parallel_for(delayed.size(), [&](std::size_t i) {
    write_text(fs::path(c.out) / fs::relative(scan.paths[i], corpus),
               serialize_episode(delayed[i]));
  });
  if (fs::exists(fs::path(corpus) / "splits.json")) {
    fs::copy_file(fs::path(corpus) / "splits.json", fs::path(c.out) / "splits.json",
                  fs::copy_options::overwrite_existing);
  }
  std::cout << "wrote " << delayed.size() << " delayed episodes to " << c.out << "\n";
  run.finish();
}

void cmd_report(const Common& c, const std::vector<std::string>& runs) {
  Run run("report", c.out);
  ordered_json items = ordered_json::array();
  std::ostringstream text;
  for (const auto& dir : runs) {
    const auto path = fs::path(dir) / "report.json";
    run.input(dir, path);
    const auto doc = ordered_json::parse(read_text(path));
    items.push_back({{"run", fs::path(dir).filename().generic_string()}, {"report", doc}});
    text << "== " << dir << " (" << doc.value("subcommand", "?") << ")\n";
    const auto txt = fs::path(dir) / "report.txt";
    if (fs::exists(txt)) text << read_text(txt);
    text << "\n";
  }
  run.write_report({{"runs", items}}, text.str());
  run.finish();
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return "ParseError";
  if (dynamic_cast<const SchemaError*>(&e)) return "SchemaError";
  if (dynamic_cast<const IoError*>(&e)) return "IoError";
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const TrainError*>(&e)) return "TrainError";
  if (dynamic_cast<const ModelFormatError*>(&e)) return "ModelFormatError";
  if (dynamic_cast<const EvalError*>(&e)) return "EvalError";
  if (dynamic_cast<const Error*>(&e)) return "Error";
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return "IoError";
  if (dynamic_cast<const json::exception*>(&e)) return "FormatError";
  return "InternalError";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Agent fingerprinting from UI-event traces"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all cores)");

  Common common;
  auto add_out = [&common](CLI::App* sub) {
    sub->add_option("--out", common.out, "run directory for outputs")->required();
  };
  auto add_seed = [&common](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "random seed")->required();
  };
  auto add_plot = [&common](CLI::App* sub) {
    sub->add_flag("--emit-plot-data", common.emit_plot_data, "also write CSV series");
  };

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic corpus");
  std::string suite, profiles_file;
  std::vector<std::size_t> episodes = {150, 75, 75};
  sim->add_option("--suite", suite, "preset suite name");
  sim->add_option("--profiles", profiles_file, "YAML profile file")->check(CLI::ExistingFile);
  sim->add_option("--episodes", episodes, "episodes per agent: train,val,test")
      ->delimiter(',')
      ->expected(3)
      ->capture_default_str();
  add_out(sim);
  add_seed(sim);

  // ingest
  auto* ing = app.add_subcommand("ingest", "validate a corpus and summarise it");
  std::string corpus, dataset, splits_arg;
  bool released = false;
  ing->add_option("--corpus", corpus, "corpus root")->required()->check(CLI::ExistingDirectory);
  ing->add_option("--dataset", dataset, "only this dataset");
  ing->add_flag("--released", released, "episodes use the released corpus field names");
  add_out(ing);

  // featurize
  auto* fea = app.add_subcommand("featurize", "extract feature CSVs per split");
  fea->add_option("--corpus", corpus, "corpus root")->required()->check(CLI::ExistingDirectory);
  fea->add_option("--splits", splits_arg, "split manifest (default <corpus>/splits.json)");
  add_out(fea);

  // train
  auto* tr = app.add_subcommand("train", "fit a classifier on featurised data");
  std::string data_dir;
  ModelChoice mc;
  tr->add_option("--data", data_dir, "featurize output")->required()->check(CLI::ExistingDirectory);
  mc.add_to(tr);
  add_out(tr);
  add_seed(tr);

  // eval-closed
  auto* ec = app.add_subcommand("eval-closed", "closed-set F1 report");
  std::string model_path, split_name = "test";
  ec->add_option("--model-file", model_path, "model.json")->required()->check(CLI::ExistingFile);
  ec->add_option("--data", data_dir, "featurize output")->required()->check(CLI::ExistingDirectory);
  ec->add_option("--split", split_name, "train, val or test")->capture_default_str();
  add_out(ec);
  add_plot(ec);

  // eval-open
  auto* eo = app.add_subcommand("eval-open", "leave-one-agent-out AUROC");
  std::vector<std::string> heldout;
  eo->add_option("--data", data_dir, "featurize output")->required()->check(CLI::ExistingDirectory);
  eo->add_option("--heldout", heldout, "agent to hold out (repeatable; default all)");
  ModelChoice mc_open;
  mc_open.add_to(eo);
  add_out(eo);
  add_seed(eo);
  add_plot(eo);

  // importance
  auto* im = app.add_subcommand("importance", "permutation feature importance");
  int repeats = 5;
  im->add_option("--model-file", model_path, "model.json")->required()->check(CLI::ExistingFile);
  im->add_option("--data", data_dir, "featurize output")->required()->check(CLI::ExistingDirectory);
  im->add_option("--split", split_name, "train, val or test")->capture_default_str();
  im->add_option("--repeats", repeats, "shuffles per feature")->capture_default_str();
  add_out(im);
  add_seed(im);
  add_plot(im);

  // curves
  auto* cu = app.add_subcommand("curves", "training-fraction, truncation and delay curves");
  CurveArgs ca;
  ModelChoice mc_curve;
  cu->add_option("--kind", ca.kind, "fraction, truncation or delay")
      ->required()
      ->check(CLI::IsMember({"fraction", "truncation", "delay"}));
  cu->add_option("--data", ca.data, "featurize output (fraction)");
  cu->add_option("--corpus", ca.corpus, "corpus root (truncation, delay)");
  cu->add_option("--splits", ca.splits, "split manifest (default <corpus>/splits.json)");
  cu->add_option("--model-file", ca.model_file, "trained model (truncation test_side)");
  cu->add_option("--mode", ca.mode, "test_side or train_side")
      ->check(CLI::IsMember({"test_side", "train_side"}))
      ->capture_default_str();
  cu->add_option("--fractions", ca.fractions, "comma-separated fractions in (0, 1]")->delimiter(',');
  cu->add_option("--ks", ca.ks, "comma-separated event counts")->delimiter(',');
  cu->add_option("--budgets", ca.budgets, "comma-separated delay budgets (ms)")->delimiter(',');
  mc_curve.add_to(cu);
  add_out(cu);
  add_seed(cu);
  add_plot(cu);

  // perturb
  auto* pe = app.add_subcommand("perturb", "inject uniform random delays into a corpus");
  std::int64_t budget = 0;
  pe->add_option("--corpus", corpus, "corpus root")->required()->check(CLI::ExistingDirectory);
  pe->add_option("--budget", budget, "maximum delay per gap (ms)")->required();
  add_out(pe);
  add_seed(pe);

  // report
  auto* rep = app.add_subcommand("report", "collect report.json files from runs");
  std::vector<std::string> runs;
  rep->add_option("--runs", runs, "run directories")->required()->check(CLI::ExistingDirectory);
  add_out(rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    set_thread_count(threads);
    if (*sim) {
      cmd_simulate(common, suite, profiles_file, episodes);
    } else if (*ing) {
      cmd_ingest(common, corpus, dataset, released);
    } else if (*fea) {
      cmd_featurize(common, corpus, splits_arg);
    } else if (*tr) {
      cmd_train(common, data_dir, mc);
    } else if (*ec) {
      cmd_eval_closed(common, model_path, data_dir, split_name);
    } else if (*eo) {
      cmd_eval_open(common, data_dir, heldout, mc_open);
    } else if (*im) {
      cmd_importance(common, model_path, data_dir, split_name, repeats);
    } else if (*cu) {
      cmd_curves(common, ca, mc_curve);
    } else if (*pe) {
      cmd_perturb(common, corpus, budget);
    } else if (*rep) {
      cmd_report(common, runs);
    }
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    ordered_json err = {{"error", error_kind(e)}, {"message", e.what()}};
    if (const auto* pe = dynamic_cast<const ParseError*>(&e)) err["offset"] = pe->offset();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
