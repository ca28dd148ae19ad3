#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

#include "agentfp/search.hpp"

namespace agentfp {

// Model file layout (JSON):
//   {"magic": "agentfp-model", "version": 1,
//    "catalog_hash": "<16 hex digits>", "kind": "linear"|"forest"|"gbt",
//    "class_names": [...], "config": {...}, ...kind-specific body}
// Tree bodies store "trees": [{"value_width", "nodes", "values"}] with each
// node as [feature, threshold, missing_left, left, right, leaf]. Infinite
// thresholds are written as the strings "inf" / "-inf".
inline constexpr std::string_view kModelMagic = "agentfp-model";
inline constexpr int kModelFormatVersion = 1;

nlohmann::ordered_json config_to_json(const ModelConfig& config);
// Missing keys take defaults. Throws ConfigError for ill-typed values.
ModelConfig config_from_json(const nlohmann::json& j, ModelKind kind);

std::string serialize_model(const Classifier& model);
// Throws ModelFormatError for malformed or truncated text, a wrong magic or
// version, or a catalog hash that differs from this build's.
ClassifierPtr deserialize_model(std::string_view text);

void save_model(const std::filesystem::path& path, const Classifier& model);
ClassifierPtr load_model(const std::filesystem::path& path);

ModelKind parse_model_kind(std::string_view name);

}  // namespace agentfp
