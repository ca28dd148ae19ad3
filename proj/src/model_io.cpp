#include "agentfp/model_io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "agentfp/error.hpp"
#include "agentfp/features.hpp"

namespace agentfp {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

ordered_json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double read_number(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ModelFormatError("bad number '" + s + "'");
  }
  if (!j.is_number()) throw ModelFormatError("expected a number");
  return j.get<double>();
}

ordered_json tree_to_json(const DecisionTree& t) {
  ordered_json nodes = ordered_json::array();
  for (const auto& n : t.nodes) {
    nodes.push_back(ordered_json::array(
        {n.feature, number(n.threshold), n.missing_left, n.left, n.right, n.leaf}));
  }
  ordered_json values = ordered_json::array();
  for (double v : t.values) values.push_back(v);
  return ordered_json{{"value_width", t.value_width},
                      {"nodes", std::move(nodes)},
                      {"values", std::move(values)}};
}

DecisionTree tree_from_json(const json& j) {
  DecisionTree t;
  t.value_width = j.at("value_width").get<std::size_t>();
  if (t.value_width == 0) throw ModelFormatError("zero leaf width");
  for (const auto& v : j.at("values")) t.values.push_back(read_number(v));
  if (t.values.size() % t.value_width != 0) {
    throw ModelFormatError("leaf values not a multiple of leaf width");
  }
  const auto n_leaves = static_cast<std::int64_t>(t.values.size() / t.value_width);
  const auto& nodes = j.at("nodes");
  const auto n_nodes = static_cast<std::int64_t>(nodes.size());
  if (n_nodes == 0) throw ModelFormatError("empty tree");
  for (const auto& a : nodes) {
    if (!a.is_array() || a.size() != 6) throw ModelFormatError("bad tree node");
    DecisionTree::Node n;
    n.feature = a[0].get<std::int32_t>();
    n.threshold = read_number(a[1]);
    n.missing_left = a[2].get<bool>();
    n.left = a[3].get<std::int32_t>();
    n.right = a[4].get<std::int32_t>();
    n.leaf = a[5].get<std::int32_t>();
    const auto self = static_cast<std::int64_t>(t.nodes.size());
    if (n.feature < 0) {
      if (n.leaf < 0 || n.leaf >= n_leaves) throw ModelFormatError("bad leaf index");
    } else if (n.feature >= static_cast<std::int32_t>(kFeatureCount) ||
               n.left <= self || n.right <= self || n.left >= n_nodes ||
               n.right >= n_nodes) {
      throw ModelFormatError("bad split node");
    }
    t.nodes.push_back(n);
  }
  return t;
}

}  // namespace

ModelKind parse_model_kind(std::string_view name) {
  if (name == "linear" || name == "lr") return ModelKind::Linear;
  if (name == "forest" || name == "rf") return ModelKind::Forest;
  if (name == "gbt" || name == "xgb") return ModelKind::Gbt;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

ordered_json config_to_json(const ModelConfig& config) {
  return std::visit(
      [](const auto& c) -> ordered_json {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, LinearConfig>) {
          return {{"penalty", c.penalty == Penalty::L1 ? "l1" : "l2"},
                  {"C", c.C},
                  {"max_iter", c.max_iter},
                  {"tol", c.tol}};
        } else if constexpr (std::is_same_v<C, ForestConfig>) {
          ordered_json depth = nullptr;
          if (c.max_depth != kUnlimitedDepth) depth = c.max_depth;
          ordered_json mf;
          if (c.max_features.rule == MaxFeatures::Rule::Fraction) {
            mf = c.max_features.fraction;
          } else {
            mf = c.max_features.to_string();
          }
          return {{"n_estimators", c.n_estimators},
                  {"max_depth", depth},
                  {"max_features", mf},
                  {"min_samples_split", c.min_samples_split}};
        } else {
          return {{"n_estimators", c.n_estimators},
                  {"learning_rate", c.learning_rate},
                  {"max_depth", c.max_depth},
                  {"subsample", c.subsample},
                  {"colsample_bytree", c.colsample_bytree},
                  {"reg_alpha", c.reg_alpha},
                  {"reg_lambda", c.reg_lambda},
                  {"min_child_weight", c.min_child_weight},
                  {"gamma", c.gamma}};
        }
      },
      config);
}

ModelConfig config_from_json(const json& j, ModelKind kind) {
  if (!j.is_object()) throw ConfigError("model config must be an object");
  try {
    switch (kind) {
      case ModelKind::Linear: {
        LinearConfig c;
        if (j.contains("penalty")) {
          const auto p = j["penalty"].get<std::string>();
          if (p == "l1") {
            c.penalty = Penalty::L1;
          } else if (p == "l2") {
            c.penalty = Penalty::L2;
          } else {
            throw ConfigError("penalty must be l1 or l2");
          }
        }
        c.C = j.value("C", c.C);
        c.max_iter = j.value("max_iter", c.max_iter);
        c.tol = j.value("tol", c.tol);
        return c;
      }
      case ModelKind::Forest: {
        ForestConfig c;
        c.n_estimators = j.value("n_estimators", c.n_estimators);
        if (j.contains("max_depth") && !j["max_depth"].is_null()) {
          c.max_depth = j["max_depth"].get<int>();
        }
        if (j.contains("max_features")) {
          const auto& mf = j["max_features"];
          c.max_features = mf.is_string()
                               ? MaxFeatures::parse(mf.get<std::string>())
                               : MaxFeatures{MaxFeatures::Rule::Fraction,
                                             mf.get<double>()};
        }
        c.min_samples_split = j.value("min_samples_split", c.min_samples_split);
        return c;
      }
      case ModelKind::Gbt: {
        GbtConfig c;
        c.n_estimators = j.value("n_estimators", c.n_estimators);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.max_depth = j.value("max_depth", c.max_depth);
        c.subsample = j.value("subsample", c.subsample);
        c.colsample_bytree = j.value("colsample_bytree", c.colsample_bytree);
        c.reg_alpha = j.value("reg_alpha", c.reg_alpha);
        c.reg_lambda = j.value("reg_lambda", c.reg_lambda);
        c.min_child_weight = j.value("min_child_weight", c.min_child_weight);
        c.gamma = j.value("gamma", c.gamma);
        return c;
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad model config: ") + e.what());
  }
  throw ConfigError("bad model kind");
}

std::string serialize_model(const Classifier& model) {
  ordered_json j;
  j["magic"] = kModelMagic;
  j["version"] = kModelFormatVersion;
  j["catalog_hash"] = hex64(feature_catalog_hash());
  j["kind"] = to_string(model.kind());
  j["class_names"] = model.class_names();
  switch (model.kind()) {
    case ModelKind::Linear: {
      const auto& m = dynamic_cast<const LinearModel&>(model);
      j["config"] = config_to_json(m.config());
      const auto& s = m.scaler();
      j["scaler"] = {{"impute", s.impute()}, {"mean", s.mean()}, {"scale", s.scale()}};
      j["weights"] = m.weights();
      j["intercepts"] = m.intercepts();
      j["iterations"] = m.iterations();
      break;
    }
    case ModelKind::Forest: {
      const auto& m = dynamic_cast<const ForestModel&>(model);
      j["config"] = config_to_json(m.config());
      auto& trees = j["trees"] = ordered_json::array();
      for (const auto& t : m.trees()) trees.push_back(tree_to_json(t));
      break;
    }
    case ModelKind::Gbt: {
      const auto& m = dynamic_cast<const GbtModel&>(model);
      j["config"] = config_to_json(m.config());
      auto& trees = j["trees"] = ordered_json::array();
      for (const auto& t : m.trees()) trees.push_back(tree_to_json(t));
      break;
    }
  }
  return j.dump() + "\n";
}

ClassifierPtr deserialize_model(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ModelFormatError(std::string("unreadable model file: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("magic", "") != kModelMagic) {
      throw ModelFormatError("not a model file (bad magic)");
    }
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw ModelFormatError("unsupported model format version " +
                             std::to_string(version));
    }
    const auto hash = j.at("catalog_hash").get<std::string>();
    if (hash != hex64(feature_catalog_hash())) {
      throw ModelFormatError("feature catalog hash mismatch: model " + hash +
                             ", build " + hex64(feature_catalog_hash()));
    }
    auto names = j.at("class_names").get<std::vector<std::string>>();
    const std::size_t k = names.size();
    if (k < 2) throw ModelFormatError("model needs at least two classes");
    const auto kind = parse_model_kind(j.at("kind").get<std::string>());
    const auto config = config_from_json(j.at("config"), kind);

    if (kind == ModelKind::Linear) {
      const auto& sj = j.at("scaler");
      using Arr = std::array<double, kFeatureCount>;
      const Standardizer scaler(sj.at("impute").get<Arr>(), sj.at("mean").get<Arr>(),
                                sj.at("scale").get<Arr>());
      auto weights = j.at("weights").get<std::vector<double>>();
      auto intercepts = j.at("intercepts").get<std::vector<double>>();
      if (weights.size() != k * kFeatureCount || intercepts.size() != k) {
        throw ModelFormatError("coefficient shape does not match class count");
      }
      return std::make_shared<LinearModel>(
          std::move(names), std::get<LinearConfig>(config), scaler,
          std::move(weights), std::move(intercepts), j.at("iterations").get<int>());
    }

    std::vector<DecisionTree> trees;
    for (const auto& t : j.at("trees")) trees.push_back(tree_from_json(t));
    if (kind == ModelKind::Forest) {
      if (trees.empty()) throw ModelFormatError("forest has no trees");
      for (const auto& t : trees) {
        if (t.value_width != k) throw ModelFormatError("forest leaf width mismatch");
      }
      return std::make_shared<ForestModel>(
          std::move(names), std::get<ForestConfig>(config), std::move(trees));
    }
    if (trees.size() % k != 0) {
      throw ModelFormatError("boosted tree count is not a multiple of classes");
    }
    for (const auto& t : trees) {
      if (t.value_width != 1) throw ModelFormatError("boosted leaf width mismatch");
    }
    return std::make_shared<GbtModel>(std::move(names), std::get<GbtConfig>(config),
                                      std::move(trees));
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("malformed model file: ") + e.what());
  } catch (const ConfigError& e) {
    throw ModelFormatError(std::string("malformed model config: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const Classifier& model) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize_model(model);
  if (!out) throw IoError("write failed for " + path.string());
}

ClassifierPtr load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace agentfp
