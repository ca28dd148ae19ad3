#include "agentfp/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "agentfp/error.hpp"
#include "agentfp/features.hpp"
#include "agentfp/parallel.hpp"
#include "json.hpp"

namespace agentfp {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string event_context(std::size_t index) {
  return "event " + std::to_string(index);
}

const ojson& require(const ojson& obj, const char* key,
                     const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError(where + ": missing field '" + key + "'");
  }
  return *it;
}

double require_number(const ojson& obj, const char* key,
                      const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number()) {
    throw SchemaError(where + ": field '" + key + "' must be a number");
  }
  return v.get<double>();
}

std::string require_string(const ojson& obj, const char* key,
                           const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) {
    throw SchemaError(where + ": field '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

std::string optional_string(const ojson& obj, const char* key) {
  auto it = obj.find(key);
  return (it != obj.end() && it->is_string()) ? it->get<std::string>() : "";
}

std::int64_t parse_timestamp(const ojson& v, const std::string& where) {
  std::int64_t t = 0;
  if (v.is_number_integer()) {
    t = v.get<std::int64_t>();
  } else if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d != std::floor(d)) {
      throw SchemaError(where + ": t_ms must be an integer, got " +
                        v.dump());
    }
    t = static_cast<std::int64_t>(d);
  } else {
    throw SchemaError(where + ": t_ms must be an integer");
  }
  if (t < 0) {
    throw SchemaError(where + ": negative timestamp " + std::to_string(t));
  }
  return t;
}

double parse_depth(const ojson& rec, const std::string& where) {
  const double d = require_number(rec, "depth_pct", where);
  if (!(d >= 0.0 && d <= 100.0)) {
    throw SchemaError(where + ": depth_pct " + std::to_string(d) +
                      " outside [0, 100]");
  }
  return d;
}

// Collects members not in `known` into a compact JSON object string.
std::string collect_extra(const ojson& obj,
                          std::initializer_list<std::string_view> known) {
  ojson extra = ojson::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      extra[it.key()] = it.value();
    }
  }
  return extra.empty() ? std::string() : extra.dump();
}

void merge_extra(ojson& obj, const std::string& extra) {
  if (extra.empty()) return;
  const auto parsed = ojson::parse(extra);
  for (auto it = parsed.begin(); it != parsed.end(); ++it) {
    obj[it.key()] = it.value();
  }
}

Event parse_event(const ojson& rec, std::size_t index, Diagnostics* diag) {
  const auto where = event_context(index);
  if (!rec.is_object()) throw SchemaError(where + ": not an object");
  const auto kind_name = require_string(rec, "kind", where);
  const auto kind = parse_event_kind(kind_name);
  if (!kind) throw SchemaError("unknown event kind '" + kind_name + "'");

  Event ev;
  ev.t_ms = parse_timestamp(require(rec, "t_ms", where), where);
  switch (*kind) {
    case EventKind::Click: {
      ClickPayload c;
      c.x = require_number(rec, "x", where);
      c.y = require_number(rec, "y", where);
      if (auto it = rec.find("is_link"); it != rec.end()) {
        if (!it->is_boolean()) {
          throw SchemaError(where + ": field 'is_link' must be a boolean");
        }
        c.is_link = it->get<bool>();
      }
      if (diag && (c.x < 0 || c.x > kViewportWidth || c.y < 0 ||
                   c.y > kViewportHeight)) {
        diag->warn(where + ": click (" + std::to_string(c.x) + ", " +
                   std::to_string(c.y) + ") outside the 1280x768 viewport");
      }
      ev.payload = c;
      ev.extra = collect_extra(rec, {"kind", "t_ms", "x", "y", "is_link"});
      break;
    }
    case EventKind::Keydown:
      ev.payload = KeydownPayload{require_string(rec, "key", where)};
      ev.extra = collect_extra(rec, {"kind", "t_ms", "key"});
      break;
    case EventKind::Scroll:
      ev.payload = ScrollPayload{parse_depth(rec, where)};
      ev.extra = collect_extra(rec, {"kind", "t_ms", "depth_pct"});
      break;
    case EventKind::Navigate: {
      NavigatePayload n;
      n.url = require_string(rec, "url", where);
      if (auto it = rec.find("trigger"); it != rec.end()) {
        if (!it->is_string()) {
          throw SchemaError(where + ": field 'trigger' must be a string");
        }
        const auto t = parse_nav_trigger(it->get<std::string>());
        if (!t) {
          throw SchemaError(where + ": unknown navigate trigger '" +
                            it->get<std::string>() + "'");
        }
        n.trigger = *t;
      } else {
        n.trigger = NavTrigger::Other;
        if (diag) diag->warn(where + ": navigate without trigger, using 'other'");
      }
      ev.payload = std::move(n);
      ev.extra = collect_extra(rec, {"kind", "t_ms", "url", "trigger"});
      break;
    }
    case EventKind::BeforeUnload:
      ev.payload = BeforeUnloadPayload{parse_depth(rec, where)};
      ev.extra = collect_extra(rec, {"kind", "t_ms", "depth_pct"});
      break;
    case EventKind::Focus:
      ev.payload = FocusPayload{require_string(rec, "target", where)};
      ev.extra = collect_extra(rec, {"kind", "t_ms", "target"});
      break;
  }
  return ev;
}

EpisodeMetadata parse_meta(const ojson& doc) {
  const auto& m = require(doc, "meta", "episode");
  if (!m.is_object()) throw SchemaError("episode: 'meta' must be an object");
  EpisodeMetadata meta;
  meta.agent_id = require_string(m, "agent_id", "meta");
  if (meta.agent_id.empty()) throw SchemaError("meta: empty agent_id");
  meta.model_name = optional_string(m, "model_name");
  meta.dataset = optional_string(m, "dataset");
  meta.episode_id = optional_string(m, "episode_id");
  if (auto it = m.find("page_count"); it != m.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
      throw SchemaError("meta: page_count must be a non-negative integer");
    }
    meta.page_count = it->get<std::int64_t>();
  }
  if (auto it = m.find("urls"); it != m.end()) {
    if (!it->is_array()) throw SchemaError("meta: 'urls' must be an array");
    for (const auto& u : *it) {
      if (!u.is_string()) throw SchemaError("meta: urls must be strings");
      meta.urls.push_back(u.get<std::string>());
    }
  }
  meta.extra = collect_extra(m, {"agent_id", "model_name", "dataset",
                                 "episode_id", "page_count", "urls"});
  meta.document_extra = collect_extra(doc, {"meta", "events"});
  return meta;
}

ojson parse_json(std::string_view bytes) {
  try {
    return ojson::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
}

}  // namespace

Trace parse_episode(std::string_view bytes, Diagnostics* diag) {
  const auto doc = parse_json(bytes);
  if (!doc.is_object()) throw SchemaError("episode: top level must be an object");
  auto meta = parse_meta(doc);

  const auto& recs = require(doc, "events", "episode");
  if (!recs.is_array()) throw SchemaError("episode: 'events' must be an array");
  std::vector<Event> events;
  events.reserve(recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    events.push_back(parse_event(recs[i], i, diag));
  }
  const bool sorted = std::is_sorted(
      events.begin(), events.end(),
      [](const Event& a, const Event& b) { return a.t_ms < b.t_ms; });
  if (!sorted) {
    std::stable_sort(
        events.begin(), events.end(),
        [](const Event& a, const Event& b) { return a.t_ms < b.t_ms; });
    if (diag) {
      diag->warn("episode '" + meta.episode_id +
                 "': events out of timestamp order, re-sorted");
    }
  }
  return Trace(std::move(meta), std::move(events));
}

std::string serialize_episode(const Trace& trace) {
  const auto& meta = trace.meta();
  ojson doc = ojson::object();
  ojson m = ojson::object();
  m["agent_id"] = meta.agent_id;
  m["model_name"] = meta.model_name;
  m["dataset"] = meta.dataset;
  m["episode_id"] = meta.episode_id;
  if (meta.page_count) m["page_count"] = *meta.page_count;
  if (!meta.urls.empty()) m["urls"] = meta.urls;
  merge_extra(m, meta.extra);
  doc["meta"] = std::move(m);

  ojson events = ojson::array();
  for (const auto& ev : trace.events()) {
    ojson rec = ojson::object();
    rec["kind"] = std::string(to_string(ev.kind()));
    rec["t_ms"] = ev.t_ms;
    std::visit(
        [&rec](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, ClickPayload>) {
            rec["x"] = p.x;
            rec["y"] = p.y;
            rec["is_link"] = p.is_link;
          } else if constexpr (std::is_same_v<P, KeydownPayload>) {
            rec["key"] = p.key;
          } else if constexpr (std::is_same_v<P, ScrollPayload> ||
                               std::is_same_v<P, BeforeUnloadPayload>) {
            rec["depth_pct"] = p.depth_pct;
          } else if constexpr (std::is_same_v<P, NavigatePayload>) {
            rec["url"] = p.url;
            rec["trigger"] = std::string(to_string(p.trigger));
          } else {
            rec["target"] = p.target;
          }
        },
        ev.payload);
    merge_extra(rec, ev.extra);
    events.push_back(std::move(rec));
  }
  doc["events"] = std::move(events);
  merge_extra(doc, meta.document_extra);
  return doc.dump(1);
}

fs::path episode_path(const fs::path& root, const EpisodeMetadata& meta,
                      std::string_view timestamp) {
  return root / meta.agent_id / meta.dataset / std::string(timestamp) /
         (meta.episode_id + ".json");
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ScanSlot {
  std::optional<Trace> trace;
  std::string error;
  std::vector<std::string> warnings;
};

}  // namespace

CorpusScan scan_corpus(const fs::path& root,
                       const std::optional<std::string>& dataset_filter,
                       EpisodeFormat format) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw IoError("corpus root is not a readable directory: " + root.string());
  }
  std::vector<fs::path> files;
  fs::recursive_directory_iterator it(root, ec);
  if (ec) throw IoError("cannot read " + root.string() + ": " + ec.message());
  for (const auto& entry : it) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") {
      continue;
    }
    const auto rel = fs::relative(entry.path(), root);
    if (std::distance(rel.begin(), rel.end()) != 4) continue;
    if (dataset_filter && *std::next(rel.begin()) != *dataset_filter) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<ScanSlot> slots(files.size());
  parallel_for(files.size(), [&](std::size_t i) {
    auto& slot = slots[i];
    try {
      auto bytes = read_file(files[i]);
      if (format == EpisodeFormat::Released) {
        bytes = convert_released_episode(bytes);
      }
      Diagnostics diag;
      Trace t = parse_episode(bytes, &diag);
      const auto rel = fs::relative(files[i], root);
      auto part = rel.begin();
      const std::string path_agent = part->string();
      const std::string path_dataset = std::next(part)->string();
      EpisodeMetadata meta = t.meta();
      bool changed = false;
      if (meta.agent_id != path_agent) {
        diag.warn(files[i].string() + ": agent_id '" + meta.agent_id +
                  "' disagrees with path, using '" + path_agent + "'");
        meta.agent_id = path_agent;
        changed = true;
      }
      if (meta.dataset != path_dataset) {
        if (!meta.dataset.empty()) {
          diag.warn(files[i].string() + ": dataset '" + meta.dataset +
                    "' disagrees with path, using '" + path_dataset + "'");
        }
        meta.dataset = path_dataset;
        changed = true;
      }
      if (meta.episode_id.empty()) {
        meta.episode_id = files[i].stem().string();
        changed = true;
      }
      slot.trace = changed ? Trace(std::move(meta), t.events()) : std::move(t);
      slot.warnings = std::move(diag.warnings);
    } catch (const Error& e) {
      slot.error = e.what();
    } catch (const std::exception& e) {
      slot.error = e.what();
    }
  });

  CorpusScan out;
  for (std::size_t i = 0; i < files.size(); ++i) {
    auto& slot = slots[i];
    for (auto& w : slot.warnings) out.warnings.push_back(std::move(w));
    if (slot.trace) {
      out.traces.push_back(std::move(*slot.trace));
      out.paths.push_back(files[i]);
    } else {
      out.errors.push_back({files[i], slot.error});
    }
  }
  return out;
}

SplitManifest read_split_manifest(const fs::path& path) {
  const auto bytes = read_file(path);
  const auto doc = parse_json(bytes);
  const auto it = doc.find("splits");
  if (it == doc.end() || !it->is_object()) {
    throw ConfigError(path.string() + ": expected an object 'splits'");
  }
  SplitManifest m;
  for (auto e = it->begin(); e != it->end(); ++e) {
    const auto s = e->is_string() ? parse_split(e->get<std::string>())
                                  : std::nullopt;
    if (!s) {
      throw ConfigError(path.string() + ": bad split for episode '" +
                        e.key() + "'");
    }
    m.emplace(e.key(), *s);
  }
  return m;
}

void write_split_manifest(const fs::path& path, const SplitManifest& manifest) {
  ojson splits = ojson::object();
  for (const auto& [id, split] : manifest) {
    splits[id] = std::string(to_string(split));
  }
  ojson doc = {{"version", 1}, {"splits", std::move(splits)}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

const LabeledDataset& DatasetSplits::get(Split s) const {
  switch (s) {
    case Split::Train:
      return train;
    case Split::Val:
      return val;
    case Split::Test:
      return test;
  }
  return train;
}

std::vector<std::string> class_names_of(std::span<const Trace> traces) {
  std::set<std::string> names;
  for (const auto& t : traces) names.insert(t.meta().agent_id);
  return {names.begin(), names.end()};
}

LabeledDataset featurize(std::span<const Trace> traces,
                         const std::vector<std::string>& class_names,
                         Split split) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    index.emplace(class_names[i], i);
  }
  LabeledDataset ds;
  ds.class_names = class_names;
  ds.split = split;
  ds.rows.resize(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto it = index.find(traces[i].meta().agent_id);
    if (it == index.end()) {
      throw ConfigError("agent '" + traces[i].meta().agent_id +
                        "' is not in the class list");
    }
    ds.rows[i].label = it->second;
    ds.rows[i].episode_id = traces[i].meta().episode_id;
  }
  parallel_for(traces.size(), [&](std::size_t i) {
    ds.rows[i].x = extract_features(traces[i]);
  });
  return ds;
}

TraceSplits split_traces(std::span<const Trace> traces,
                         const SplitManifest& manifest) {
  TraceSplits out;
  for (const auto& t : traces) {
    const auto it = manifest.find(t.meta().episode_id);
    if (it == manifest.end()) {
      throw ConfigError("episode '" + t.meta().episode_id +
                        "' missing from split manifest");
    }
    switch (it->second) {
      case Split::Train:
        out.train.push_back(t);
        break;
      case Split::Val:
        out.val.push_back(t);
        break;
      case Split::Test:
        out.test.push_back(t);
        break;
    }
  }
  return out;
}

DatasetSplits build_dataset(std::span<const Trace> traces,
                            const SplitManifest& manifest) {
  const auto names = class_names_of(traces);
  const auto parts = split_traces(traces, manifest);
  DatasetSplits out;
  out.train = featurize(parts.train, names, Split::Train);
  out.val = featurize(parts.val, names, Split::Val);
  out.test = featurize(parts.test, names, Split::Test);
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

}  // namespace

void write_dataset_csv(std::ostream& out, const LabeledDataset& data) {
  for (auto name : kFeatureNames) out << name << ',';
  out << "label,episode_id\n";
  char buf[32];
  for (const auto& row : data.rows) {
    for (double v : row.x.values) {
      if (!is_missing(v)) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
      }
      out << ',';
    }
    out << csv_field(data.class_names.at(row.label)) << ','
        << csv_field(row.episode_id) << '\n';
  }
}

LabeledDataset read_dataset_csv(std::istream& in, Split split,
                                const std::vector<std::string>& class_names) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("dataset CSV: empty input");
  const auto header = split_csv_line(line);
  if (header.size() != kFeatureCount + 2) {
    throw SchemaError("dataset CSV: expected " +
                      std::to_string(kFeatureCount + 2) + " columns, got " +
                      std::to_string(header.size()));
  }
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (header[i] != kFeatureNames[i]) {
      throw SchemaError("dataset CSV: column " + std::to_string(i) + " is '" +
                        header[i] + "', expected '" +
                        std::string(kFeatureNames[i]) + "'");
    }
  }
  struct Raw {
    FeatureVector x;
    std::string label;
    std::string episode;
  };
  std::vector<Raw> raw;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != kFeatureCount + 2) {
      throw SchemaError("dataset CSV line " + std::to_string(line_no) +
                        ": wrong field count");
    }
    Raw r;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      if (fields[i].empty()) {
        r.x[i] = kMissing;
        continue;
      }
      try {
        std::size_t used = 0;
        r.x[i] = std::stod(fields[i], &used);
        if (used != fields[i].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw SchemaError("dataset CSV line " + std::to_string(line_no) +
                          ": bad number '" + fields[i] + "'");
      }
    }
    r.label = fields[kFeatureCount];
    r.episode = fields[kFeatureCount + 1];
    raw.push_back(std::move(r));
  }

  LabeledDataset ds;
  ds.split = split;
  if (class_names.empty()) {
    std::set<std::string> names;
    for (const auto& r : raw) names.insert(r.label);
    ds.class_names.assign(names.begin(), names.end());
  } else {
    ds.class_names = class_names;
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ds.class_names.size(); ++i) {
    index.emplace(ds.class_names[i], i);
  }
  for (auto& r : raw) {
    const auto it = index.find(r.label);
    if (it == index.end()) {
      throw ConfigError("dataset CSV: label '" + r.label +
                        "' not in the class list");
    }
    ds.rows.push_back({r.x, it->second, std::move(r.episode)});
  }
  return ds;
}

}  // namespace agentfp
