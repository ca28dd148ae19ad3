#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace agentfp {

// Declaration order matches the EventPayload alternatives below, so
// `Event::kind()` is the variant index.
enum class EventKind : std::uint8_t {
  Click,
  Keydown,
  Scroll,
  Navigate,
  BeforeUnload,
  Focus,
};

inline constexpr std::size_t kEventKindCount = 6;
inline constexpr std::array<EventKind, kEventKindCount> kAllEventKinds = {
    EventKind::Click,    EventKind::Keydown,      EventKind::Scroll,
    EventKind::Navigate, EventKind::BeforeUnload, EventKind::Focus};

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view name);

// Harness viewport in CSS pixels.
inline constexpr double kViewportWidth = 1280.0;
inline constexpr double kViewportHeight = 768.0;

struct ClickPayload {
  double x = 0.0;
  double y = 0.0;
  bool is_link = false;

  bool operator==(const ClickPayload&) const = default;
};

struct KeydownPayload {
  std::string key;

  bool operator==(const KeydownPayload&) const = default;
};

struct ScrollPayload {
  double depth_pct = 0.0;

  bool operator==(const ScrollPayload&) const = default;
};

enum class NavTrigger : std::uint8_t { Http, Popstate, Other };

std::string_view to_string(NavTrigger trigger);
std::optional<NavTrigger> parse_nav_trigger(std::string_view name);

struct NavigatePayload {
  std::string url;
  NavTrigger trigger = NavTrigger::Http;

  bool operator==(const NavigatePayload&) const = default;
};

struct BeforeUnloadPayload {
  double depth_pct = 0.0;

  bool operator==(const BeforeUnloadPayload&) const = default;
};

struct FocusPayload {
  std::string target;

  bool operator==(const FocusPayload&) const = default;
};

using EventPayload = std::variant<ClickPayload, KeydownPayload, ScrollPayload,
                                  NavigatePayload, BeforeUnloadPayload,
                                  FocusPayload>;

struct Event {
  std::int64_t t_ms = 0;
  EventPayload payload;
  // Unrecognised record members, kept verbatim as a compact JSON object
  // (empty when there were none). Never read by feature extraction.
  std::string extra;

  EventKind kind() const noexcept {
    return static_cast<EventKind>(payload.index());
  }
};

struct EpisodeMetadata {
  std::string agent_id;
  std::string model_name;
  std::string dataset;
  std::string episode_id;
  std::optional<std::int64_t> page_count;
  std::vector<std::string> urls;
  std::string extra;  // same convention as Event::extra
  // Unknown top-level members of the episode document (answer, action log).
  std::string document_extra;
};

// One episode: metadata plus events ordered by non-decreasing timestamp.
// Immutable once built; the constructor enforces the ordering and
// timestamp invariants and throws SchemaError otherwise.
class Trace {
 public:
  Trace() = default;
  Trace(EpisodeMetadata meta, std::vector<Event> events);

  const EpisodeMetadata& meta() const noexcept { return meta_; }
  const std::vector<Event>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }

 private:
  EpisodeMetadata meta_;
  std::vector<Event> events_;
};

// Gaps between consecutive events of any kind, in milliseconds.
std::vector<double> delta_ts(const Trace& trace);

// First `k` events of the trace. The recorded page count is dropped since it
// describes the full episode; the page count then falls back to URLs seen.
Trace truncate_trace(const Trace& trace, std::size_t k);

inline constexpr std::size_t kFeatureCount = 41;
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) noexcept { return std::isnan(v); }

struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double& operator[](std::size_t i) noexcept { return values[i]; }
  double operator[](std::size_t i) const noexcept { return values[i]; }
};

enum class Split : std::uint8_t { Train, Val, Test };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view name);

struct LabeledRow {
  FeatureVector x;
  std::size_t label = 0;
  std::string episode_id;
};

struct LabeledDataset {
  std::vector<std::string> class_names;
  Split split = Split::Train;
  std::vector<LabeledRow> rows;

  std::size_t num_classes() const noexcept { return class_names.size(); }
  std::size_t size() const noexcept { return rows.size(); }
  std::vector<std::size_t> labels() const;
  std::vector<std::size_t> class_counts() const;

  // Throws ConfigError if a label is out of range or class names repeat.
  void validate() const;
};

}  // namespace agentfp
