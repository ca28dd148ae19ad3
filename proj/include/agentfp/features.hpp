#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "agentfp/trace.hpp"

namespace agentfp {

// Canonical feature order. Model files and CSV exports are keyed to it
// through `feature_catalog_hash()`.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    // event volume
    "n_clicks", "n_scrolls", "n_navigations", "n_keydowns", "n_focus",
    "n_events_total", "page_count", "n_unique_domains",
    // global timing
    "total_duration_s", "t_first_action_ms", "mean_iei_ms", "std_iei_ms",
    "median_iei_ms", "p10_iei_ms", "p90_iei_ms", "iei_trend",
    // per-type planning latency
    "mean_click_iei_ms", "std_click_iei_ms", "mean_nav_iei_ms",
    "std_nav_iei_ms", "max_page_dwell_ms", "mean_key_iei_ms",
    "std_key_iei_ms",
    // scroll behaviour
    "max_scroll_pct", "mean_scroll_pct", "n_deep_scrolls", "scroll_reversals",
    // click spatial distribution
    "click_x_std", "click_y_std", "click_bbox_area_frac", "click_top_frac",
    "n_link_clicks", "link_click_ratio",
    // navigation strategy
    "popstate_ratio", "scroll_to_click_ratio", "actions_per_page",
    "nav_to_click_ratio", "keydowns_per_page", "focus_per_page",
    "structural_key_ratio",
    // exit behaviour
    "mean_exit_scroll_pct"};

namespace feat {
enum Index : std::size_t {
  n_clicks,
  n_scrolls,
  n_navigations,
  n_keydowns,
  n_focus,
  n_events_total,
  page_count,
  n_unique_domains,
  total_duration_s,
  t_first_action_ms,
  mean_iei_ms,
  std_iei_ms,
  median_iei_ms,
  p10_iei_ms,
  p90_iei_ms,
  iei_trend,
  mean_click_iei_ms,
  std_click_iei_ms,
  mean_nav_iei_ms,
  std_nav_iei_ms,
  max_page_dwell_ms,
  mean_key_iei_ms,
  std_key_iei_ms,
  max_scroll_pct,
  mean_scroll_pct,
  n_deep_scrolls,
  scroll_reversals,
  click_x_std,
  click_y_std,
  click_bbox_area_frac,
  click_top_frac,
  n_link_clicks,
  link_click_ratio,
  popstate_ratio,
  scroll_to_click_ratio,
  actions_per_page,
  nav_to_click_ratio,
  keydowns_per_page,
  focus_per_page,
  structural_key_ratio,
  mean_exit_scroll_pct,
};
}  // namespace feat

enum class FeatureFamily : std::uint8_t {
  Volume,
  GlobalTiming,
  TypeLatency,
  Scroll,
  ClickSpatial,
  Navigation,
  Exit,
};

FeatureFamily feature_family(std::size_t index);
std::string_view to_string(FeatureFamily family);

// Global timing plus per-type latency: the only features a pure timing
// perturbation can move.
bool is_timing_feature(std::size_t index);

// Integer-valued features (exact comparison in tests).
bool is_count_feature(std::size_t index);

// Features that are proportions in [0, 1] when defined.
bool is_unit_ratio_feature(std::size_t index);

std::optional<std::size_t> feature_index(std::string_view name);

// FNV-1a over the newline-joined names.
std::uint64_t feature_catalog_hash();

// Scroll depth threshold (percent) above which a scroll counts as deep.
inline constexpr double kDeepScrollPct = 60.0;
// Clicks with y below this (pixels) land in the top quarter of the viewport.
inline constexpr double kTopBandPx = kViewportHeight / 4.0;

struct IeiStats {
  double mean = kMissing;
  double std = kMissing;
  double median = kMissing;
  double p10 = kMissing;
  double p90 = kMissing;
};

// Population std; inclusive linear-interpolation percentiles. Empty input
// yields all-missing.
IeiStats iei_stats(std::span<const double> intervals);

// Linear interpolation between order statistics, q in [0, 1].
// `sorted` must be ascending and non-empty.
double percentile_sorted(std::span<const double> sorted, double q);

// Strict sign changes between consecutive non-zero deltas.
std::size_t scroll_reversals(std::span<const double> depths);

bool is_structural_key(std::string_view key);

// Lower-cased host component of a URL; empty if none.
std::string url_host(std::string_view url);

FeatureVector extract_features(const Trace& trace);

}  // namespace agentfp
