#include "agentfp/features.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>
#include <string>

namespace agentfp {

FeatureFamily feature_family(std::size_t index) {
  if (index <= feat::n_unique_domains) return FeatureFamily::Volume;
  if (index <= feat::iei_trend) return FeatureFamily::GlobalTiming;
  if (index <= feat::std_key_iei_ms) return FeatureFamily::TypeLatency;
  if (index <= feat::scroll_reversals) return FeatureFamily::Scroll;
  if (index <= feat::link_click_ratio) return FeatureFamily::ClickSpatial;
  if (index <= feat::structural_key_ratio) return FeatureFamily::Navigation;
  return FeatureFamily::Exit;
}

bool is_timing_feature(std::size_t index) {
  const auto fam = feature_family(index);
  return fam == FeatureFamily::GlobalTiming || fam == FeatureFamily::TypeLatency;
}

bool is_count_feature(std::size_t index) {
  switch (index) {
    case feat::n_clicks:
    case feat::n_scrolls:
    case feat::n_navigations:
    case feat::n_keydowns:
    case feat::n_focus:
    case feat::n_events_total:
    case feat::page_count:
    case feat::n_unique_domains:
    case feat::n_deep_scrolls:
    case feat::scroll_reversals:
    case feat::n_link_clicks:
      return true;
    default:
      return false;
  }
}

bool is_unit_ratio_feature(std::size_t index) {
  return index == feat::link_click_ratio || index == feat::popstate_ratio ||
         index == feat::click_top_frac ||
         index == feat::structural_key_ratio ||
         index == feat::click_bbox_area_frac;
}

std::optional<std::size_t> feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureNames.size(); ++i) {
    if (kFeatureNames[i] == name) return i;
  }
  return std::nullopt;
}

std::string_view to_string(FeatureFamily family) {
  switch (family) {
    case FeatureFamily::Volume:
      return "volume";
    case FeatureFamily::GlobalTiming:
      return "global_timing";
    case FeatureFamily::TypeLatency:
      return "type_latency";
    case FeatureFamily::Scroll:
      return "scroll";
    case FeatureFamily::ClickSpatial:
      return "click_spatial";
    case FeatureFamily::Navigation:
      return "navigation";
    case FeatureFamily::Exit:
      return "exit";
  }
  return "volume";
}

std::uint64_t feature_catalog_hash() {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto name : kFeatureNames) {
    for (char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    h ^= static_cast<unsigned char>('\n');
    h *= 0x100000001b3ULL;
  }
  return h;
}

double percentile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

double pop_std(std::span<const double> v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

double ratio_or_missing(double num, double den) {
  return den > 0.0 ? num / den : kMissing;
}

std::vector<double> gaps(const std::vector<double>& times) {
  std::vector<double> out;
  for (std::size_t i = 1; i < times.size(); ++i) {
    out.push_back(times[i] - times[i - 1]);
  }
  return out;
}

// Mean IEI of the later temporal half over the earlier one. Events at or
// before the midpoint of [first, last] belong to the first half.
double iei_trend(const std::vector<Event>& events) {
  if (events.size() < 2) return kMissing;
  const double first = static_cast<double>(events.front().t_ms);
  const double last = static_cast<double>(events.back().t_ms);
  const double mid = 0.5 * (first + last);
  std::vector<double> early, late;
  for (const auto& e : events) {
    const auto t = static_cast<double>(e.t_ms);
    (t <= mid ? early : late).push_back(t);
  }
  if (early.size() < 2 || late.size() < 2) return kMissing;
  const auto g1 = gaps(early);
  const auto g2 = gaps(late);
  const double m1 = mean_of(g1);
  return ratio_or_missing(mean_of(g2), m1);
}

}  // namespace

IeiStats iei_stats(std::span<const double> intervals) {
  IeiStats s;
  if (intervals.empty()) return s;
  std::vector<double> sorted(intervals.begin(), intervals.end());
  std::sort(sorted.begin(), sorted.end());
  s.mean = mean_of(intervals);
  s.std = pop_std(intervals, s.mean);
  s.median = percentile_sorted(sorted, 0.5);
  s.p10 = percentile_sorted(sorted, 0.1);
  s.p90 = percentile_sorted(sorted, 0.9);
  return s;
}

std::size_t scroll_reversals(std::span<const double> depths) {
  std::size_t reversals = 0;
  int last_sign = 0;
  for (std::size_t i = 1; i < depths.size(); ++i) {
    const double d = depths[i] - depths[i - 1];
    if (d == 0.0) continue;
    const int sign = d > 0.0 ? 1 : -1;
    if (last_sign != 0 && sign != last_sign) ++reversals;
    last_sign = sign;
  }
  return reversals;
}

bool is_structural_key(std::string_view key) {
  return key == "Enter" || key == "Tab" || key == "Escape" ||
         key == "Backspace" || key == "Delete" || key.starts_with("Arrow");
}

std::string url_host(std::string_view url) {
  std::string_view rest = url;
  if (auto scheme = rest.find("://"); scheme != std::string_view::npos) {
    rest.remove_prefix(scheme + 3);
  }
  rest = rest.substr(0, rest.find_first_of("/?#"));
  if (auto at = rest.rfind('@'); at != std::string_view::npos) {
    rest.remove_prefix(at + 1);
  }
  rest = rest.substr(0, rest.find(':'));
  std::string host(rest);
  for (char& c : host) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return host;
}

FeatureVector extract_features(const Trace& trace) {
  FeatureVector f;
  f.values.fill(kMissing);
  const auto& events = trace.events();
  const auto& meta = trace.meta();

  std::vector<double> click_t, nav_t, key_t, click_x, click_y, scroll_depth,
      exit_depth;
  std::size_t link_clicks = 0, top_clicks = 0, popstates = 0,
              structural_keys = 0, focus = 0;
  std::set<std::string> urls(meta.urls.begin(), meta.urls.end());

  for (const auto& e : events) {
    const auto t = static_cast<double>(e.t_ms);
    if (const auto* c = std::get_if<ClickPayload>(&e.payload)) {
      click_t.push_back(t);
      click_x.push_back(c->x);
      click_y.push_back(c->y);
      if (c->is_link) ++link_clicks;
      if (c->y < kTopBandPx) ++top_clicks;
    } else if (const auto* k = std::get_if<KeydownPayload>(&e.payload)) {
      key_t.push_back(t);
      if (is_structural_key(k->key)) ++structural_keys;
    } else if (const auto* s = std::get_if<ScrollPayload>(&e.payload)) {
      scroll_depth.push_back(s->depth_pct);
    } else if (const auto* n = std::get_if<NavigatePayload>(&e.payload)) {
      nav_t.push_back(t);
      urls.insert(n->url);
      if (n->trigger == NavTrigger::Popstate) ++popstates;
    } else if (const auto* u = std::get_if<BeforeUnloadPayload>(&e.payload)) {
      exit_depth.push_back(u->depth_pct);
    } else {
      ++focus;
    }
  }

  const auto clicks = static_cast<double>(click_t.size());
  const auto navs = static_cast<double>(nav_t.size());
  const auto keys = static_cast<double>(key_t.size());
  const auto scrolls = static_cast<double>(scroll_depth.size());
  const auto total = static_cast<double>(events.size());

  std::set<std::string> hosts;
  for (const auto& u : urls) {
    if (auto h = url_host(u); !h.empty()) hosts.insert(std::move(h));
  }
  const double pages = meta.page_count
                           ? static_cast<double>(*meta.page_count)
                           : static_cast<double>(urls.size());

  f[feat::n_clicks] = clicks;
  f[feat::n_scrolls] = scrolls;
  f[feat::n_navigations] = navs;
  f[feat::n_keydowns] = keys;
  f[feat::n_focus] = static_cast<double>(focus);
  f[feat::n_events_total] = total;
  f[feat::page_count] = pages;
  f[feat::n_unique_domains] = static_cast<double>(hosts.size());

  // global timing
  f[feat::total_duration_s] =
      events.empty()
          ? 0.0
          : static_cast<double>(events.back().t_ms - events.front().t_ms) /
                1000.0;
  if (!events.empty()) {
    f[feat::t_first_action_ms] = static_cast<double>(events.front().t_ms);
  }
  const auto all = iei_stats(delta_ts(trace));
  f[feat::mean_iei_ms] = all.mean;
  f[feat::std_iei_ms] = all.std;
  f[feat::median_iei_ms] = all.median;
  f[feat::p10_iei_ms] = all.p10;
  f[feat::p90_iei_ms] = all.p90;
  f[feat::iei_trend] = iei_trend(events);

  // per-type latency
  const auto click_gaps = gaps(click_t);
  if (!click_gaps.empty()) {
    f[feat::mean_click_iei_ms] = mean_of(click_gaps);
    f[feat::std_click_iei_ms] = pop_std(click_gaps, f[feat::mean_click_iei_ms]);
  }
  const auto nav_gaps = gaps(nav_t);
  if (!nav_gaps.empty()) {
    f[feat::mean_nav_iei_ms] = mean_of(nav_gaps);
    f[feat::std_nav_iei_ms] = pop_std(nav_gaps, f[feat::mean_nav_iei_ms]);
    f[feat::max_page_dwell_ms] =
        *std::max_element(nav_gaps.begin(), nav_gaps.end());
  }
  const auto key_gaps = gaps(key_t);
  if (!key_gaps.empty()) {
    f[feat::mean_key_iei_ms] = mean_of(key_gaps);
    f[feat::std_key_iei_ms] = pop_std(key_gaps, f[feat::mean_key_iei_ms]);
  }

  // scroll
  if (!scroll_depth.empty()) {
    f[feat::max_scroll_pct] =
        *std::max_element(scroll_depth.begin(), scroll_depth.end());
    f[feat::mean_scroll_pct] = mean_of(scroll_depth);
  }
  f[feat::n_deep_scrolls] = static_cast<double>(
      std::count_if(scroll_depth.begin(), scroll_depth.end(),
                    [](double d) { return d > kDeepScrollPct; }));
  f[feat::scroll_reversals] =
      static_cast<double>(scroll_reversals(scroll_depth));

  // click spatial
  if (!click_x.empty()) {
    f[feat::click_x_std] = pop_std(click_x, mean_of(click_x));
    f[feat::click_y_std] = pop_std(click_y, mean_of(click_y));
    const auto [xmin, xmax] = std::minmax_element(click_x.begin(), click_x.end());
    const auto [ymin, ymax] = std::minmax_element(click_y.begin(), click_y.end());
    f[feat::click_bbox_area_frac] = (*xmax - *xmin) * (*ymax - *ymin) /
                                    (kViewportWidth * kViewportHeight);
    f[feat::click_top_frac] = static_cast<double>(top_clicks) / clicks;
  }
  f[feat::n_link_clicks] = static_cast<double>(link_clicks);
  f[feat::link_click_ratio] =
      ratio_or_missing(static_cast<double>(link_clicks), clicks);

  // navigation strategy
  f[feat::popstate_ratio] =
      ratio_or_missing(static_cast<double>(popstates), navs);
  f[feat::scroll_to_click_ratio] = ratio_or_missing(scrolls, clicks);
  f[feat::actions_per_page] = ratio_or_missing(total, pages);
  f[feat::nav_to_click_ratio] = ratio_or_missing(navs, clicks);
  f[feat::keydowns_per_page] = ratio_or_missing(keys, pages);
  f[feat::focus_per_page] =
      ratio_or_missing(static_cast<double>(focus), pages);
  f[feat::structural_key_ratio] =
      ratio_or_missing(static_cast<double>(structural_keys), keys);

  if (!exit_depth.empty()) f[feat::mean_exit_scroll_pct] = mean_of(exit_depth);
  return f;
}

}  // namespace agentfp
