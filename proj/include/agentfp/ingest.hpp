#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agentfp/trace.hpp"

namespace agentfp {

// Non-fatal findings gathered while reading input.
struct Diagnostics {
  std::vector<std::string> warnings;
  void warn(std::string message) { warnings.push_back(std::move(message)); }
};

// Episode JSON:
//   {"meta": {"agent_id", "model_name", "dataset", "episode_id",
//             "page_count"?, "urls"?},
//    "events": [{"kind", "t_ms", ...payload}]}
// Events come back stably sorted by t_ms. Throws ParseError (with byte
// offset) for malformed JSON and SchemaError for schema violations.
Trace parse_episode(std::string_view bytes, Diagnostics* diag = nullptr);

// Inverse of parse_episode; unknown members captured at parse time are
// written back unchanged.
std::string serialize_episode(const Trace& trace);

// Maps an episode in the released corpus' field naming onto the schema
// above. Returns JSON text accepted by parse_episode.
std::string convert_released_episode(std::string_view bytes);

// <root>/<agent_id>/<dataset>/<timestamp>/<episode_id>.json
std::filesystem::path episode_path(const std::filesystem::path& root,
                                   const EpisodeMetadata& meta,
                                   std::string_view timestamp);

struct CorpusError {
  std::filesystem::path path;
  std::string message;
};

struct CorpusScan {
  std::vector<Trace> traces;
  std::vector<std::filesystem::path> paths;  // parallel to traces
  std::vector<CorpusError> errors;
  std::vector<std::string> warnings;
};

enum class EpisodeFormat { Native, Released };

// Reads every episode file in the canonical layout below `root`, in
// lexicographic path order. Per-file failures are collected, not thrown.
// Throws IoError if `root` is not a readable directory.
CorpusScan scan_corpus(const std::filesystem::path& root,
                       const std::optional<std::string>& dataset_filter = {},
                       EpisodeFormat format = EpisodeFormat::Native);

using SplitManifest = std::map<std::string, Split>;

SplitManifest read_split_manifest(const std::filesystem::path& path);
void write_split_manifest(const std::filesystem::path& path,
                          const SplitManifest& manifest);

struct DatasetSplits {
  LabeledDataset train;
  LabeledDataset val;
  LabeledDataset test;

  const LabeledDataset& get(Split s) const;
};

// Sorted unique agent ids.
std::vector<std::string> class_names_of(std::span<const Trace> traces);

// Featurises traces under a fixed class list. Throws ConfigError if an
// agent is not in `class_names`.
LabeledDataset featurize(std::span<const Trace> traces,
                         const std::vector<std::string>& class_names,
                         Split split);

// Throws ConfigError naming the first episode absent from the manifest.
DatasetSplits build_dataset(std::span<const Trace> traces,
                            const SplitManifest& manifest);

// Traces grouped by manifest split, preserving input order.
struct TraceSplits {
  std::vector<Trace> train;
  std::vector<Trace> val;
  std::vector<Trace> test;
};
TraceSplits split_traces(std::span<const Trace> traces,
                         const SplitManifest& manifest);

// CSV with the 41 feature columns, then "label" (agent id) and
// "episode_id". Missing values are empty fields.
void write_dataset_csv(std::ostream& out, const LabeledDataset& data);

// `class_names` fixes the label order; when empty the sorted set of labels
// in the file is used.
LabeledDataset read_dataset_csv(std::istream& in, Split split,
                                const std::vector<std::string>& class_names = {});

}  // namespace agentfp
