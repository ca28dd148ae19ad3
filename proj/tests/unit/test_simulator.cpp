#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <set>

#include "agentfp/error.hpp"
#include "agentfp/features.hpp"
#include "agentfp/ingest.hpp"
#include "agentfp/simulator.hpp"
#include "../support/test_util.hpp"

using namespace agentfp;
using namespace testutil;

namespace {

AgentProfile base() { return preset_suite("timing-only").front(); }

constexpr std::size_t kClick = static_cast<std::size_t>(EventKind::Click);

}  // namespace

TEST_CASE("profile validation") {
  CHECK_NOTHROW(base().validate());
  auto p = base();
  p.action_mix[kClick] += 0.1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = base();
  p.action_mix[static_cast<std::size_t>(EventKind::Navigate)] = 0.1;
  p.action_mix[kClick] -= 0.1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = base();
  p.iei[kClick].sigma = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = base();
  p.link_click_prob = 1.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = base();
  p.events.mean = 0.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = base();
  p.agent_id.clear();
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("click-only profile on a single page emits only clicks") {
  auto p = base();
  p.action_mix = {};
  p.action_mix[kClick] = 1.0;
  p.pages = {1.0, 1.0};
  for (std::uint64_t s = 0; s < 50; ++s) {
    for (const auto& e : generate_trace(p, s).events()) CHECK(e.kind() == EventKind::Click);
  }
}

TEST_CASE("generation is deterministic per seed") {
  const auto p = preset_suite("separable14")[3];
  CHECK(serialize_episode(generate_trace(p, 5, "x")) == serialize_episode(generate_trace(p, 5, "x")));
  CHECK(serialize_episode(generate_trace(p, 5, "x")) != serialize_episode(generate_trace(p, 6, "x")));
}

TEST_CASE("mean gap before clicks matches the log-normal mean") {
  const auto p = base();
  double sum = 0;
  std::size_t n = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto t = generate_trace(p, derive_seed(99, s));
    const auto& ev = t.events();
    for (std::size_t i = 1; i < ev.size(); ++i) {
      if (ev[i].kind() != EventKind::Click) continue;
      sum += static_cast<double>(ev[i].t_ms - ev[i - 1].t_ms);
      ++n;
    }
  }
  REQUIRE(n > 1000);
  const double expected = std::exp(p.iei[kClick].mu + 0.5 * p.iei[kClick].sigma * p.iei[kClick].sigma);
  CHECK(p.iei[kClick].mean() == doctest::Approx(expected));
  CHECK(std::abs(sum / static_cast<double>(n) - expected) <= 0.05 * expected);
}

TEST_CASE("generated traces respect payload ranges") {
  for (const auto& [name, profiles] : preset_suites()) {
    for (const auto& p : profiles) {
      const auto t = generate_trace(p, 1, "e");
      CHECK(t.meta().urls == std::vector<std::string>{"https://sim.example/p0"});
      CHECK(t.meta().dataset == "sim");
      CHECK_FALSE(t.empty());
      for (const auto& e : t.events()) {
        if (const auto* c = std::get_if<ClickPayload>(&e.payload)) {
          CHECK(c->x >= 0);
          CHECK(c->x < kViewportWidth);
          CHECK(c->y >= 0);
          CHECK(c->y < kViewportHeight);
        } else if (const auto* s = std::get_if<ScrollPayload>(&e.payload)) {
          CHECK(s->depth_pct >= 0);
          CHECK(s->depth_pct <= 100);
        }
      }
      // Each navigate directly follows its beforeunload.
      const auto& ev = t.events();
      for (std::size_t i = 0; i < ev.size(); ++i) {
        if (ev[i].kind() == EventKind::Navigate) {
          REQUIRE(i > 0);
          CHECK(ev[i - 1].kind() == EventKind::BeforeUnload);
        }
      }
    }
  }
}

TEST_CASE("preset suites") {
  const auto suites = preset_suites();
  for (auto name : {"separable14", "timing-only", "action-only", "clone-pair", "extreme"}) {
    REQUIRE(suites.count(name) == 1);
  }
  std::set<std::string> ids;
  for (const auto& p : preset_suite("separable14")) ids.insert(p.agent_id);
  CHECK(ids.size() == 14);
  CHECK_THROWS_AS(preset_suite("nope"), ConfigError);

  // timing-only agents differ in inter-event gaps and nothing else.
  const auto timing = preset_suite("timing-only");
  for (auto p : timing) {
    auto q = timing.front();
    q.agent_id = p.agent_id;
    q.model_name = p.model_name;
    q.iei = p.iei;
    CHECK(q == p);
  }
  // action-only agents share every timing parameter.
  const auto action = preset_suite("action-only");
  for (const auto& p : action) {
    CHECK(p.iei == action.front().iei);
    CHECK(p.first_action == action.front().first_action);
    CHECK(p.action_mix == action.front().action_mix);
  }
  // The clone repeats its source's parameters under a new id.
  const auto clones = preset_suite("clone-pair");
  auto clone = clones.back();
  CHECK(clone.agent_id == "pair-00-clone");
  clone.agent_id = clones.front().agent_id;
  clone.model_name = clones.front().model_name;
  CHECK(clone == clones.front());
}

TEST_CASE("profile YAML round trip and errors") {
  for (const auto& [name, profiles] : preset_suites()) {
    CHECK(parse_profiles(emit_profiles(profiles)) == profiles);
  }
  CHECK_THROWS_AS(parse_profiles("version: 1\nprofiles:\n  - agent_id: a\n    colour: red\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_profiles("version: 2\nprofiles: []\n"), ConfigError);
  CHECK_THROWS_AS(parse_profiles("profiles: [unclosed"), ConfigError);
  const auto minimal = parse_profiles("version: 1\nprofiles:\n  - agent_id: solo\n");
  REQUIRE(minimal.size() == 1);
  CHECK(minimal[0].agent_id == "solo");
  CHECK_NOTHROW(minimal[0].validate());
}

TEST_CASE("corpus generation") {
  auto profiles = preset_suite("separable14");
  profiles.resize(2);
  const auto dir = temp_dir("sim");
  const auto start = std::chrono::steady_clock::now();
  const auto n = generate_corpus(profiles, {10, 5, 5}, 7, dir);
  const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(n == 40);
  CHECK(secs < 1.0);
  const auto scan = scan_corpus(dir);
  CHECK(scan.traces.size() == 40);
  CHECK(scan.errors.empty());
  CHECK(scan.warnings.empty());
  const auto manifest = read_split_manifest(dir / "splits.json");
  CHECK(manifest.size() == 40);
  CHECK(manifest.at("agent-00-train-0000") == Split::Train);
  CHECK(manifest.at("agent-01-test-0004") == Split::Test);
  const auto ds = build_dataset(scan.traces, manifest);
  CHECK(ds.train.size() == 20);
  CHECK(ds.val.size() == 10);
  CHECK(ds.test.size() == 10);

  // Files hold exactly what simulate_corpus builds in memory.
  const auto mem = simulate_corpus(profiles, {10, 5, 5}, 7);
  std::map<std::string, std::string> by_id;
  for (const auto& t : mem.traces) by_id[t.meta().episode_id] = serialize_episode(t);
  for (const auto& t : scan.traces) CHECK(serialize_episode(t) == by_id.at(t.meta().episode_id));

  auto dup = profiles;
  dup[1].agent_id = dup[0].agent_id;
  CHECK_THROWS_AS(simulate_corpus(dup, {1, 0, 0}, 1), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("full-size separable14 corpus has 4200 files") {
  const auto dir = temp_dir("sim-full");
  CHECK(generate_corpus(preset_suite("separable14"), {150, 75, 75}, 1, dir) == 4200);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "splits.json") ++files;
  }
  CHECK(files == 4200);
  const auto ds = build_dataset(scan_corpus(dir).traces, read_split_manifest(dir / "splits.json"));
  CHECK(ds.train.size() == 2100);
  CHECK(ds.val.size() == 1050);
  CHECK(ds.test.size() == 1050);
  CHECK(ds.train.num_classes() == 14);
  std::filesystem::remove_all(dir);
}
