#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "agentfp/features.hpp"
#include "../support/reference_features.hpp"
#include "../support/test_util.hpp"

using namespace agentfp;
using namespace testutil;

TEST_CASE("catalog has 41 names in fixed order") {
  REQUIRE(kFeatureNames.size() == 41);
  for (std::size_t i = 0; i < 41; ++i) CHECK(kFeatureNames[i] == reference::kNames[i]);
  CHECK(feature_index("iei_trend") == feat::iei_trend);
  CHECK_FALSE(feature_index("nope").has_value());
  std::size_t timing = 0;
  for (std::size_t i = 0; i < 41; ++i) timing += is_timing_feature(i) ? 1 : 0;
  CHECK(timing == 15);
  CHECK(is_timing_feature(feat::total_duration_s));
  CHECK(is_timing_feature(feat::std_key_iei_ms));
  CHECK_FALSE(is_timing_feature(feat::max_scroll_pct));
}

TEST_CASE("iei_stats") {
  const std::vector<double> v = {100, 200, 300};
  const auto s = iei_stats(v);
  CHECK(s.mean == doctest::Approx(200));
  CHECK(s.std == doctest::Approx(std::sqrt(20000.0 / 3.0)).epsilon(1e-12));
  CHECK(s.median == doctest::Approx(200));
  CHECK(s.p10 == doctest::Approx(120));
  CHECK(s.p90 == doctest::Approx(280));

  const auto e = iei_stats(std::vector<double>{});
  CHECK(std::isnan(e.mean));
  CHECK(std::isnan(e.std));
  CHECK(std::isnan(e.median));
  CHECK(std::isnan(e.p10));
  CHECK(std::isnan(e.p90));

  const auto one = iei_stats(std::vector<double>{42});
  CHECK(one.mean == 42);
  CHECK(one.std == 0);
  CHECK(one.median == 42);
  CHECK(one.p10 == 42);
  CHECK(one.p90 == 42);
}

TEST_CASE("scroll_reversals") {
  CHECK(scroll_reversals(std::vector<double>{10, 50, 30, 60}) == 2);
  CHECK(scroll_reversals(std::vector<double>{10, 10, 20}) == 0);
  CHECK(scroll_reversals(std::vector<double>{50, 50, 20, 20, 40}) == 1);
  CHECK(scroll_reversals(std::vector<double>{}) == 0);
  Rng rng(3);
  std::vector<double> mono;
  double d = 0;
  for (int i = 0; i < 200; ++i) mono.push_back(d += static_cast<double>(rng() % 3));
  CHECK(scroll_reversals(mono) == 0);
}

TEST_CASE("structural keys and hosts") {
  for (auto k : {"Enter", "Tab", "Escape", "Backspace", "Delete", "ArrowUp", "ArrowLeft"}) {
    CHECK(is_structural_key(k));
  }
  for (auto k : {"a", "Shift", "enter", " ", "F5"}) CHECK_FALSE(is_structural_key(k));
  CHECK(url_host("https://User@Example.COM:8080/a?b#c") == "example.com");
  CHECK(url_host("http://x.org") == "x.org");
  CHECK(url_host("about:blank") == "about");
  CHECK(url_host("") == "");
}

TEST_CASE("hand-computed trace") {
  const auto t = make_trace({click(1000, 100, 100, true), click(3000, 300, 500, false),
                             scroll(4000, 70), nav(6000, "https://a.com/x")});
  const auto f = extract_features(t);
  CHECK(f[feat::n_clicks] == 2);
  CHECK(f[feat::n_link_clicks] == 1);
  CHECK(f[feat::link_click_ratio] == 0.5);
  CHECK(f[feat::mean_iei_ms] == doctest::Approx(5000.0 / 3.0));
  CHECK(f[feat::mean_click_iei_ms] == 2000);
  CHECK(f[feat::n_deep_scrolls] == 1);
  CHECK(f[feat::click_x_std] == 100);
  CHECK(f[feat::click_top_frac] == 0.5);
  CHECK(f[feat::t_first_action_ms] == 1000);
  CHECK(f[feat::total_duration_s] == 5.0);
  CHECK(f[feat::page_count] == 1);
  CHECK(f[feat::n_unique_domains] == 1);
  CHECK(std::isnan(f[feat::mean_nav_iei_ms]));
  CHECK(std::isnan(f[feat::max_page_dwell_ms]));
  CHECK(std::isnan(f[feat::structural_key_ratio]));
  CHECK(std::isnan(f[feat::mean_exit_scroll_pct]));
  CHECK(f[feat::click_bbox_area_frac] == doctest::Approx(200.0 * 400.0 / (1280.0 * 768.0)));
}

TEST_CASE("empty trace") {
  const auto f = extract_features(make_trace({}));
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (is_count_feature(i)) {
      CHECK(f[i] == 0);
    } else if (i == feat::total_duration_s) {
      CHECK(f[i] == 0);
    } else {
      CHECK_MESSAGE(std::isnan(f[i]), kFeatureNames[i]);
    }
  }
}

TEST_CASE("simultaneous events") {
  const auto f = extract_features(
      make_trace({click(500, 1, 1), key(500, "a"), key(500, "Enter"), scroll(500, 10)}));
  CHECK(f[feat::std_iei_ms] == 0);
  CHECK(f[feat::mean_iei_ms] == 0);
  CHECK(f[feat::total_duration_s] == 0);
  CHECK(std::isnan(f[feat::iei_trend]));
  CHECK(f[feat::structural_key_ratio] == 0.5);
}

TEST_CASE("iei_trend splits by time") {
  // Midpoint 500: first half {0, 100, 200}, second half {800, 1000}.
  const auto f = extract_features(
      make_trace({key(0, "a"), key(100, "a"), key(200, "a"), key(800, "a"), key(1000, "a")}));
  CHECK(f[feat::iei_trend] == doctest::Approx(200.0 / 100.0));
  // A half with a single event has no gap.
  const auto g = extract_features(make_trace({key(0, "a"), key(10, "a"), key(1000, "a")}));
  CHECK(std::isnan(g[feat::iei_trend]));
}

TEST_CASE("navigation features") {
  auto t = make_trace({nav(0, "https://a.com/1"), click(100, 5, 5),
                       nav(1100, "https://B.com/2", NavTrigger::Popstate), unload(1500, 40),
                       nav(4100, "https://b.com/3"), unload(4200, 80), key(4300, "ArrowDown"),
                       key(4400, "x"), focus(4500)});
  const auto f = extract_features(t);
  CHECK(f[feat::n_navigations] == 3);
  CHECK(f[feat::mean_nav_iei_ms] == 2050);
  CHECK(f[feat::std_nav_iei_ms] == 950);
  CHECK(f[feat::max_page_dwell_ms] == 3000);
  CHECK(f[feat::popstate_ratio] == doctest::Approx(1.0 / 3.0));
  CHECK(f[feat::n_unique_domains] == 2);
  CHECK(f[feat::page_count] == 3);
  CHECK(f[feat::actions_per_page] == 3);
  CHECK(f[feat::nav_to_click_ratio] == 3);
  CHECK(f[feat::focus_per_page] == doctest::Approx(1.0 / 3.0));
  CHECK(f[feat::structural_key_ratio] == 0.5);
  CHECK(f[feat::mean_exit_scroll_pct] == 60);
  CHECK(f[feat::mean_key_iei_ms] == 100);
}

TEST_CASE("recorded page count wins over URLs") {
  EpisodeMetadata m;
  m.agent_id = "a";
  m.page_count = 4;
  const Trace t(m, {click(0, 1, 1), nav(10, "https://a.com")});
  CHECK(extract_features(t)[feat::page_count] == 4);
  EpisodeMetadata z = m;
  z.page_count = 0;
  const Trace u(z, {click(0, 1, 1)});
  CHECK(std::isnan(extract_features(u)[feat::actions_per_page]));
}

TEST_CASE("reference oracle on simulator traces") {
  for (const auto& t : random_sim_traces(300, 11)) {
    const auto f = extract_features(t);
    const auto r = reference::features(t);
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      if (is_count_feature(i)) {
        CHECK_MESSAGE(f[i] == r[i], kFeatureNames[i]);
      } else {
        CHECK_MESSAGE(close_rel(f[i], r[i]), kFeatureNames[i]);
      }
    }
  }
}

TEST_CASE("translation changes only the first-action time") {
  for (const auto& t : random_sim_traces(100, 5)) {
    if (t.empty()) continue;
    std::vector<Event> shifted = t.events();
    for (auto& e : shifted) e.t_ms += 12345;
    const auto f = extract_features(t);
    const auto g = extract_features(Trace(t.meta(), shifted));
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      if (i == feat::t_first_action_ms) {
        CHECK(g[i] == f[i] + 12345);
      } else if (i == feat::iei_trend) {
        CHECK(close_rel(g[i], f[i], 1e-12));
      } else {
        CHECK((g[i] == f[i] || (std::isnan(g[i]) && std::isnan(f[i]))));
      }
    }
  }
}

TEST_CASE("metadata URL order never matters") {
  auto m = make_trace({nav(0, "https://a.com")}).meta();
  m.urls = {"https://x.com", "https://a.com", "http://Y.com"};
  const Trace a(m, {nav(0, "https://a.com"), click(5, 1, 1)});
  std::reverse(m.urls.begin(), m.urls.end());
  const Trace b(m, {nav(0, "https://a.com"), click(5, 1, 1)});
  const auto fa = extract_features(a);
  const auto fb = extract_features(b);
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    CHECK((fa[i] == fb[i] || (std::isnan(fa[i]) && std::isnan(fb[i]))));
  }
  CHECK(fa[feat::n_unique_domains] == 3);
}

TEST_CASE("counts are non-negative integers and ratios lie in [0, 1]") {
  for (const auto& t : random_sim_traces(300, 23)) {
    const auto f = extract_features(t);
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      if (is_count_feature(i)) {
        CHECK(f[i] >= 0);
        CHECK(f[i] == std::floor(f[i]));
      }
      if (is_unit_ratio_feature(i) && !std::isnan(f[i])) {
        CHECK(f[i] >= 0);
        CHECK(f[i] <= 1);
      }
    }
  }
}
