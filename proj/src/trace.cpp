#include "agentfp/trace.hpp"

#include <algorithm>
#include <set>

#include "agentfp/error.hpp"

namespace agentfp {

namespace {
constexpr std::array<std::string_view, kEventKindCount> kKindNames = {
    "click", "keydown", "scroll", "navigate", "beforeunload", "focus"};
}

std::string_view to_string(EventKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

std::optional<EventKind> parse_event_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<EventKind>(i);
  }
  return std::nullopt;
}

std::string_view to_string(NavTrigger trigger) {
  switch (trigger) {
    case NavTrigger::Http:
      return "http";
    case NavTrigger::Popstate:
      return "popstate";
    case NavTrigger::Other:
      return "other";
  }
  return "other";
}

std::optional<NavTrigger> parse_nav_trigger(std::string_view name) {
  if (name == "http") return NavTrigger::Http;
  if (name == "popstate") return NavTrigger::Popstate;
  if (name == "other") return NavTrigger::Other;
  return std::nullopt;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  return std::nullopt;
}

Trace::Trace(EpisodeMetadata meta, std::vector<Event> events)
    : meta_(std::move(meta)), events_(std::move(events)) {
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (events_[i].t_ms < 0) {
      throw SchemaError("negative timestamp " +
                        std::to_string(events_[i].t_ms) + " at event " +
                        std::to_string(i));
    }
    if (i > 0 && events_[i].t_ms < events_[i - 1].t_ms) {
      throw SchemaError("events not ordered by timestamp at index " +
                        std::to_string(i));
    }
  }
}

std::vector<double> delta_ts(const Trace& trace) {
  const auto& ev = trace.events();
  std::vector<double> out;
  if (ev.size() < 2) return out;
  out.reserve(ev.size() - 1);
  for (std::size_t i = 1; i < ev.size(); ++i) {
    out.push_back(static_cast<double>(ev[i].t_ms - ev[i - 1].t_ms));
  }
  return out;
}

Trace truncate_trace(const Trace& trace, std::size_t k) {
  EpisodeMetadata meta = trace.meta();
  meta.page_count.reset();
  const auto& ev = trace.events();
  std::vector<Event> kept(ev.begin(),
                          ev.begin() + static_cast<std::ptrdiff_t>(
                                           std::min(k, ev.size())));
  return Trace(std::move(meta), std::move(kept));
}

std::vector<std::size_t> LabeledDataset::labels() const {
  std::vector<std::size_t> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.label);
  return out;
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (const auto& r : rows) {
    if (r.label < counts.size()) ++counts[r.label];
  }
  return counts;
}

void LabeledDataset::validate() const {
  std::set<std::string> seen;
  for (const auto& name : class_names) {
    if (!seen.insert(name).second) {
      throw ConfigError("duplicate class name '" + name + "'");
    }
  }
  for (const auto& r : rows) {
    if (r.label >= class_names.size()) {
      throw ConfigError("label " + std::to_string(r.label) +
                        " out of range for " +
                        std::to_string(class_names.size()) + " classes");
    }
  }
}

}  // namespace agentfp
