// Field-name mapping from the released trace corpus onto the native episode
// schema. The alias tables are the only place that knows the released
// naming; extend them here if the published files use other spellings.

#include <algorithm>
#include <cctype>
#include <cmath>

#include "agentfp/error.hpp"
#include "agentfp/ingest.hpp"
#include "json.hpp"

namespace agentfp {

namespace {

using ojson = nlohmann::ordered_json;
using Aliases = std::initializer_list<const char*>;

constexpr Aliases kMetaContainer = {"meta", "metadata", "episode_metadata"};
constexpr Aliases kAgentId = {"agent_id", "agentId", "agent"};
constexpr Aliases kModelName = {"model_name", "modelName", "model"};
constexpr Aliases kDataset = {"dataset", "dataset_name", "task_type", "task"};
constexpr Aliases kEpisodeId = {"episode_id", "episodeId", "id"};
constexpr Aliases kPageCount = {"page_count", "pageCount", "n_pages"};
constexpr Aliases kUrls = {"urls", "visited_urls"};
constexpr Aliases kEventsContainer = {"events", "dom_events", "browser_events",
                                      "trace", "event_trace"};
constexpr Aliases kKind = {"kind", "type", "event"};
constexpr Aliases kTime = {"t_ms", "t", "time_ms", "timestamp", "ts"};
constexpr Aliases kX = {"x", "clientX"};
constexpr Aliases kY = {"y", "clientY"};
constexpr Aliases kIsLink = {"is_link", "isLink"};
constexpr Aliases kHref = {"href"};
constexpr Aliases kKey = {"key"};
constexpr Aliases kDepth = {"depth_pct", "scroll_pct", "scrollPct",
                            "scroll_depth", "scrollDepth", "depth"};
constexpr Aliases kUrl = {"url", "to", "target_url"};
constexpr Aliases kTrigger = {"trigger", "nav_type"};
constexpr Aliases kTarget = {"target", "tag", "tagName"};

const ojson* find_any(const ojson& obj, Aliases names, const char** used) {
  for (const char* n : names) {
    if (auto it = obj.find(n); it != obj.end()) {
      if (used) *used = n;
      return &*it;
    }
  }
  return nullptr;
}

// Moves the first aliased member found into `out[canonical]`, erasing it
// from `rest` so leftovers stay as extras.
bool take(ojson& rest, ojson& out, const char* canonical, Aliases names) {
  const char* used = nullptr;
  const ojson* v = find_any(rest, names, &used);
  if (!v) return false;
  out[canonical] = *v;
  rest.erase(used);
  return true;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return s;
}

ojson convert_event(const ojson& src) {
  if (!src.is_object()) throw SchemaError("released event: not an object");
  ojson rest = src;
  ojson out = ojson::object();
  if (!take(rest, out, "kind", kKind)) {
    throw SchemaError("released event: no kind/type field");
  }
  out["kind"] = lower(out["kind"].get<std::string>());
  if (!take(rest, out, "t_ms", kTime)) {
    throw SchemaError("released event: no timestamp field");
  }
  if (out["t_ms"].is_number_float()) {
    out["t_ms"] = static_cast<std::int64_t>(std::llround(out["t_ms"].get<double>()));
  }
  const std::string kind = out["kind"].get<std::string>();
  if (kind == "click") {
    take(rest, out, "x", kX);
    take(rest, out, "y", kY);
    if (!take(rest, out, "is_link", kIsLink)) {
      const char* used = nullptr;
      if (const ojson* href = find_any(rest, kHref, &used)) {
        out["is_link"] = href->is_string() && !href->get<std::string>().empty();
      }
    }
  } else if (kind == "keydown") {
    take(rest, out, "key", kKey);
  } else if (kind == "scroll" || kind == "beforeunload") {
    take(rest, out, "depth_pct", kDepth);
  } else if (kind == "navigate") {
    take(rest, out, "url", kUrl);
    take(rest, out, "trigger", kTrigger);
  } else if (kind == "focus") {
    if (take(rest, out, "target", kTarget) && out["target"].is_string()) {
      out["target"] = lower(out["target"].get<std::string>());
    }
  }
  for (auto it = rest.begin(); it != rest.end(); ++it) {
    out[it.key()] = it.value();
  }
  return out;
}

}  // namespace

std::string convert_released_episode(std::string_view bytes) {
  ojson doc;
  try {
    doc = ojson::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!doc.is_object()) throw SchemaError("released episode: not an object");

  const char* meta_key = nullptr;
  const ojson* meta_src = find_any(doc, kMetaContainer, &meta_key);
  ojson meta_rest = meta_src && meta_src->is_object() ? *meta_src : doc;
  ojson meta = ojson::object();
  take(meta_rest, meta, "agent_id", kAgentId);
  take(meta_rest, meta, "model_name", kModelName);
  take(meta_rest, meta, "dataset", kDataset);
  take(meta_rest, meta, "episode_id", kEpisodeId);
  take(meta_rest, meta, "page_count", kPageCount);
  take(meta_rest, meta, "urls", kUrls);
  if (meta.contains("episode_id") && !meta["episode_id"].is_string()) {
    meta["episode_id"] = meta["episode_id"].dump();
  }

  const char* events_key = nullptr;
  const ojson* events_src = find_any(doc, kEventsContainer, &events_key);
  if (!events_src || !events_src->is_array()) {
    throw SchemaError("released episode: no event array");
  }
  ojson events = ojson::array();
  for (const auto& e : *events_src) events.push_back(convert_event(e));

  ojson out = ojson::object();
  if (meta_src && meta_src->is_object()) {
    for (auto it = meta_rest.begin(); it != meta_rest.end(); ++it) {
      meta[it.key()] = it.value();
    }
  }
  out["meta"] = std::move(meta);
  out["events"] = std::move(events);
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if ((meta_key && it.key() == meta_key) || it.key() == events_key) continue;
    if (!meta_src && (meta_rest.find(it.key()) == meta_rest.end())) continue;
    out[it.key()] = it.value();
  }
  return out.dump();
}

}  // namespace agentfp
