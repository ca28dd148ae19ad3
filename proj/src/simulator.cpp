#include "agentfp/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "agentfp/error.hpp"
#include "agentfp/parallel.hpp"
#include "agentfp/rng.hpp"

namespace agentfp {

namespace fs = std::filesystem;

double LogNormal::mean() const { return std::exp(mu + 0.5 * sigma * sigma); }

namespace {

constexpr std::size_t idx(EventKind k) { return static_cast<std::size_t>(k); }

void require(bool ok, const std::string& agent, const std::string& what) {
  if (!ok) throw ConfigError("profile '" + agent + "': " + what);
}

bool is_prob(double p) { return p >= 0.0 && p <= 1.0; }

std::int64_t negative_binomial(Rng& rng, const CountDist& d, double shift) {
  const double mean = d.mean - shift;
  if (mean <= 0.0) return 0;
  std::gamma_distribution<double> gamma(d.dispersion, mean / d.dispersion);
  const double lambda = gamma(rng);
  if (!(lambda > 0.0)) return 0;
  std::poisson_distribution<std::int64_t> poisson(lambda);
  return poisson(rng);
}

std::int64_t draw_gap(Rng& rng, const LogNormal& ln) {
  std::lognormal_distribution<double> d(ln.mu, ln.sigma);
  return std::max<std::int64_t>(0, std::llround(d(rng)));
}

double round_to(double v, double unit) { return std::round(v / unit) * unit; }

}  // namespace

void AgentProfile::validate() const {
  const auto& id = agent_id;
  require(!agent_id.empty(), id, "empty agent_id");
  require(first_action.sigma > 0.0, id, "first_action sigma must be positive");
  for (auto k : kAllEventKinds) {
    require(iei[idx(k)].sigma > 0.0, id,
            "iei sigma must be positive for " + std::string(to_string(k)));
  }
  double sum = 0.0;
  for (auto k : kAllEventKinds) {
    require(action_mix[idx(k)] >= 0.0, id, "negative action_mix weight");
    sum += action_mix[idx(k)];
  }
  require(action_mix[idx(EventKind::Navigate)] == 0.0 &&
              action_mix[idx(EventKind::BeforeUnload)] == 0.0,
          id, "navigate and beforeunload come from page transitions");
  require(std::abs(sum - 1.0) < 1e-9, id, "action_mix must sum to 1");
  require(click_std >= 0.0, id, "click std must be non-negative");
  require(is_prob(link_click_prob), id, "link_click_prob outside [0, 1]");
  require(is_prob(scroll_reversal_prob), id, "scroll reversal_prob outside [0, 1]");
  require(is_prob(structural_key_prob), id, "structural_key_prob outside [0, 1]");
  require(is_prob(popstate_prob), id, "popstate_prob outside [0, 1]");
  require(scroll_step_mean >= 0.0 && scroll_step_std >= 0.0, id,
          "scroll step parameters must be non-negative");
  require(pages.mean >= 1.0 && pages.dispersion > 0.0, id,
          "pages needs mean >= 1 and positive dispersion");
  require(events.mean >= 1.0 && events.dispersion > 0.0, id,
          "events needs mean >= 1 and positive dispersion");
}

Trace generate_trace(const AgentProfile& profile, std::uint64_t seed,
                     const std::string& episode_id) {
  profile.validate();
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const auto n_actions = 1 + negative_binomial(rng, profile.events, 1.0);
  const auto n_pages = 1 + negative_binomial(rng, profile.pages, 1.0);
  const auto n_transitions = std::min<std::int64_t>(n_pages - 1, n_actions);
  std::uniform_int_distribution<std::int64_t> place(1, n_actions);
  std::vector<std::int64_t> transitions(static_cast<std::size_t>(n_transitions));
  for (auto& p : transitions) p = place(rng);
  std::sort(transitions.begin(), transitions.end());

  EpisodeMetadata meta;
  meta.agent_id = profile.agent_id;
  meta.model_name = profile.model_name;
  meta.dataset = std::string(kSimDataset);
  if (episode_id.empty()) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(seed));
    meta.episode_id = profile.agent_id + "-" + buf;
  } else {
    meta.episode_id = episode_id;
  }
  const std::string site = "https://sim.example/";
  meta.urls = {site + "p0"};

  std::discrete_distribution<std::size_t> kind_dist(profile.action_mix.begin(),
                                                    profile.action_mix.end());
  std::normal_distribution<double> click_x(profile.click_center_x, profile.click_std);
  std::normal_distribution<double> click_y(profile.click_center_y, profile.click_std);
  std::normal_distribution<double> step(profile.scroll_step_mean, profile.scroll_step_std);
  std::uniform_int_distribution<int> letter('a', 'z');
  static const std::array<const char*, 5> kStructural = {"Enter", "Tab", "ArrowDown",
                                                         "Backspace", "ArrowUp"};
  std::uniform_int_distribution<std::size_t> structural(0, kStructural.size() - 1);

  std::vector<Event> events;
  std::int64_t t = 0;
  double depth = 0.0;
  double direction = 1.0;
  std::vector<std::string> history = {meta.urls.front()};
  std::size_t next_page = 1;

  auto push = [&](EventKind kind, EventPayload payload) {
    t += events.empty() ? draw_gap(rng, profile.first_action)
                        : draw_gap(rng, profile.iei[idx(kind)]);
    events.push_back({t, std::move(payload), {}});
  };

  auto transition = [&]() {
    push(EventKind::BeforeUnload, BeforeUnloadPayload{depth});
    NavigatePayload nav;
    if (history.size() > 1 && unit(rng) < profile.popstate_prob) {
      history.pop_back();
      nav.url = history.back();
      nav.trigger = NavTrigger::Popstate;
    } else {
      nav.url = site + "p" + std::to_string(next_page++);
      nav.trigger = NavTrigger::Http;
      history.push_back(nav.url);
    }
    push(EventKind::Navigate, std::move(nav));
    depth = 0.0;
    direction = 1.0;
  };

  std::size_t next_transition = 0;
  for (std::int64_t a = 0; a < n_actions; ++a) {
    while (next_transition < transitions.size() && transitions[next_transition] == a) {
      transition();
      ++next_transition;
    }
    const auto kind = static_cast<EventKind>(kind_dist(rng));
    switch (kind) {
      case EventKind::Click: {
        ClickPayload c;
        c.x = std::clamp(std::round(click_x(rng)), 0.0, kViewportWidth - 1.0);
        c.y = std::clamp(std::round(click_y(rng)), 0.0, kViewportHeight - 1.0);
        c.is_link = unit(rng) < profile.link_click_prob;
        push(kind, c);
        break;
      }
      case EventKind::Keydown: {
        KeydownPayload k;
        if (unit(rng) < profile.structural_key_prob) {
          k.key = kStructural[structural(rng)];
        } else {
          k.key = std::string(1, static_cast<char>(letter(rng)));
        }
        push(kind, std::move(k));
        break;
      }
      case EventKind::Scroll: {
        if (unit(rng) < profile.scroll_reversal_prob) direction = -direction;
        depth += direction * std::abs(step(rng));
        if (depth >= 100.0) {
          depth = 100.0;
          direction = -1.0;
        } else if (depth <= 0.0) {
          depth = 0.0;
          direction = 1.0;
        }
        depth = round_to(depth, 0.01);
        push(kind, ScrollPayload{depth});
        break;
      }
      default: {
        push(EventKind::Focus, FocusPayload{unit(rng) < 0.5 ? "input" : "textarea"});
        break;
      }
    }
  }
  while (next_transition < transitions.size()) {
    transition();
    ++next_transition;
  }
  return Trace(std::move(meta), std::move(events));
}

SimulatedCorpus simulate_corpus(const std::vector<AgentProfile>& profiles,
                                EpisodeCounts counts, std::uint64_t seed) {
  std::set<std::string> ids;
  for (const auto& p : profiles) {
    p.validate();
    if (!ids.insert(p.agent_id).second) {
      throw ConfigError("duplicate agent_id '" + p.agent_id + "'");
    }
  }
  struct Job {
    const AgentProfile* profile;
    std::string episode_id;
  };
  std::vector<Job> jobs;
  SimulatedCorpus corpus;
  for (const auto& p : profiles) {
    for (auto [split, n] : {std::pair{Split::Train, counts.train},
                            std::pair{Split::Val, counts.val},
                            std::pair{Split::Test, counts.test}}) {
      for (std::size_t i = 0; i < n; ++i) {
        char buf[24];
        std::snprintf(buf, sizeof buf, "%04zu", i);
        std::string id = p.agent_id + "-" + std::string(to_string(split)) + "-" + buf;
        corpus.manifest.emplace(id, split);
        jobs.push_back({&p, std::move(id)});
      }
    }
  }
  corpus.traces.resize(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t j) {
    corpus.traces[j] = generate_trace(*jobs[j].profile,
                                      derive_seed(seed, jobs[j].episode_id),
                                      jobs[j].episode_id);
  });
  return corpus;
}

std::size_t generate_corpus(const std::vector<AgentProfile>& profiles,
                            EpisodeCounts counts, std::uint64_t seed,
                            const fs::path& root) {
  const auto corpus = simulate_corpus(profiles, counts, seed);
  const std::string stamp = "sim-seed" + std::to_string(seed);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create " + root.string() + ": " + ec.message());
  for (const auto& p : profiles) {
    fs::create_directories(root / p.agent_id / std::string(kSimDataset) / stamp, ec);
    if (ec) throw IoError("cannot create directories under " + root.string());
  }
  parallel_for(corpus.traces.size(), [&](std::size_t i) {
    const auto& tr = corpus.traces[i];
    const auto path = episode_path(root, tr.meta(), stamp);
    std::ofstream out(path, std::ios::binary);
    out << serialize_episode(tr);
    if (!out) throw IoError("cannot write " + path.string());
  });
  write_split_manifest(root / "splits.json", corpus.manifest);
  return corpus.traces.size();
}

// ---------------------------------------------------------------------------
// Presets

namespace {

LogNormal ln_median(double median_ms, double sigma) {
  return {std::log(median_ms), sigma};
}

// Geometric level j of n between lo and hi.
double geo(std::size_t j, std::size_t n, double lo, double hi) {
  return lo * std::pow(hi / lo, static_cast<double>(j) / static_cast<double>(n - 1));
}

double lin(std::size_t j, std::size_t n, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n - 1);
}

void set_mix(AgentProfile& p, double click, double key, double scroll, double focus) {
  const double s = click + key + scroll + focus;
  p.action_mix.fill(0.0);
  p.action_mix[idx(EventKind::Click)] = click / s;
  p.action_mix[idx(EventKind::Keydown)] = key / s;
  p.action_mix[idx(EventKind::Scroll)] = scroll / s;
  // remainder keeps the sum exact
  p.action_mix[idx(EventKind::Focus)] =
      1.0 - p.action_mix[idx(EventKind::Click)] -
      p.action_mix[idx(EventKind::Keydown)] - p.action_mix[idx(EventKind::Scroll)];
}

AgentProfile base_profile(const std::string& id) {
  AgentProfile p;
  p.agent_id = id;
  p.model_name = "sim/" + id;
  p.first_action = ln_median(1500, 0.4);
  p.iei[idx(EventKind::Click)] = ln_median(900, 0.5);
  p.iei[idx(EventKind::Keydown)] = ln_median(250, 0.5);
  p.iei[idx(EventKind::Scroll)] = ln_median(600, 0.5);
  p.iei[idx(EventKind::Navigate)] = ln_median(1200, 0.4);
  p.iei[idx(EventKind::BeforeUnload)] = ln_median(150, 0.3);
  p.iei[idx(EventKind::Focus)] = ln_median(700, 0.5);
  set_mix(p, 0.40, 0.25, 0.25, 0.10);
  p.click_center_x = 640;
  p.click_center_y = 384;
  p.click_std = 180;
  p.link_click_prob = 0.4;
  p.scroll_step_mean = 20;
  p.scroll_step_std = 8;
  p.scroll_reversal_prob = 0.2;
  p.structural_key_prob = 0.2;
  p.popstate_prob = 0.15;
  p.pages = {4.0, 3.0};
  p.events = {90.0, 2.5};
  return p;
}

std::string agent_name(const std::string& prefix, std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return prefix + buf;
}

// Each parameter walks its own permutation of the agent index so no two
// agents share a combination of levels.
std::vector<AgentProfile> separable14() {
  constexpr std::size_t n = 14;
  auto perm = [](std::size_t i, std::size_t a, std::size_t b) { return (a * i + b) % n; };
  std::vector<AgentProfile> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto p = base_profile(agent_name("agent-", i));
    const double s = 0.3;
    p.first_action = ln_median(geo(perm(i, 3, 1), n, 400, 8000), s);
    p.iei[idx(EventKind::Click)] = ln_median(geo(i, n, 300, 4000), s);
    p.iei[idx(EventKind::Keydown)] = ln_median(geo(perm(i, 3, 0), n, 80, 1200), s);
    p.iei[idx(EventKind::Scroll)] = ln_median(geo(perm(i, 5, 0), n, 200, 3200), s);
    p.iei[idx(EventKind::Focus)] = ln_median(geo(perm(i, 9, 0), n, 200, 3200), s);
    p.iei[idx(EventKind::Navigate)] = ln_median(geo(perm(i, 11, 0), n, 500, 6000), s);
    p.iei[idx(EventKind::BeforeUnload)] =
        ln_median(geo(perm(i, 13, 0), n, 30, 500), s);
    set_mix(p, lin(perm(i, 5, 2), n, 0.2, 0.6), lin(perm(i, 3, 5), n, 0.1, 0.4),
            lin(perm(i, 11, 3), n, 0.1, 0.4), lin(perm(i, 9, 7), n, 0.03, 0.15));
    p.click_std = lin(perm(i, 13, 4), n, 40, 320);
    p.click_center_y = lin(perm(i, 5, 9), n, 80, 680);
    p.link_click_prob = lin(perm(i, 3, 11), n, 0.02, 0.95);
    p.structural_key_prob = lin(perm(i, 9, 2), n, 0.0, 0.8);
    p.popstate_prob = lin(perm(i, 11, 6), n, 0.0, 0.7);
    p.scroll_step_mean = lin(perm(i, 13, 8), n, 8, 40);
    p.scroll_step_std = 0.3 * p.scroll_step_mean;
    p.scroll_reversal_prob = lin(perm(i, 5, 12), n, 0.05, 0.5);
    out.push_back(p);
  }
  return out;
}

// Same action behaviour and first-action delay; per-kind gaps differ.
std::vector<AgentProfile> timing_only() {
  constexpr std::size_t n = 6;
  std::vector<AgentProfile> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto p = base_profile(agent_name("timing-", i));
    const double s = 0.45;
    p.iei[idx(EventKind::Click)] = ln_median(geo(i, n, 400, 3000), s);
    p.iei[idx(EventKind::Keydown)] = ln_median(geo((5 * i + 1) % n, n, 120, 900), s);
    p.iei[idx(EventKind::Scroll)] = ln_median(geo((i + 3) % n, n, 300, 2400), s);
    p.iei[idx(EventKind::Focus)] = ln_median(geo((5 * i + 4) % n, n, 300, 2400), s);
    p.iei[idx(EventKind::Navigate)] = ln_median(geo((i + 2) % n, n, 600, 4000), s);
    p.iei[idx(EventKind::BeforeUnload)] = ln_median(geo((5 * i) % n, n, 50, 400), s);
    out.push_back(p);
  }
  return out;
}

// Same timing and action mix; click placement, link use, keys, history
// navigation and scrolling differ.
std::vector<AgentProfile> action_only() {
  constexpr std::size_t n = 6;
  std::vector<AgentProfile> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto p = base_profile(agent_name("action-", i));
    p.click_std = lin(i, n, 60, 300);
    p.click_center_y = lin((5 * i + 2) % n, n, 120, 600);
    p.link_click_prob = lin((i + 3) % n, n, 0.05, 0.9);
    p.structural_key_prob = lin((5 * i + 1) % n, n, 0.02, 0.7);
    p.popstate_prob = lin((i + 4) % n, n, 0.0, 0.6);
    p.scroll_step_mean = lin((5 * i + 3) % n, n, 8, 40);
    p.scroll_step_std = 0.3 * p.scroll_step_mean;
    p.scroll_reversal_prob = lin((i + 1) % n, n, 0.05, 0.5);
    out.push_back(p);
  }
  return out;
}

// Four agents with shared timing. Each differs from every other in exactly
// two of three two-level parameters (codes 000, 011, 101, 110), so all
// pairs are equally far apart. The fifth agent duplicates the first under a
// new id.
std::vector<AgentProfile> clone_pair() {
  static const std::array<std::array<int, 3>, 4> kCodes = {
      {{0, 0, 0}, {0, 1, 1}, {1, 0, 1}, {1, 1, 0}}};
  std::vector<AgentProfile> out;
  for (std::size_t j = 0; j < kCodes.size(); ++j) {
    auto p = base_profile(agent_name("pair-", j));
    const auto& c = kCodes[j];
    p.link_click_prob = c[0] ? 0.65 : 0.35;
    p.structural_key_prob = c[1] ? 0.65 : 0.35;
    p.click_std = c[2] ? 200.0 : 130.0;
    out.push_back(p);
  }
  auto clone = out.front();
  clone.agent_id = out.front().agent_id + "-clone";
  clone.model_name = out.front().model_name + "-clone";
  out.push_back(clone);
  return out;
}

// Four ordinary agents plus one whose timing, action mix, click placement and
// scrolling all lie outside the others' ranges.
std::vector<AgentProfile> extreme() {
  auto all = separable14();
  std::vector<AgentProfile> out(all.begin(), all.begin() + 4);
  auto p = base_profile("agent-extreme");
  const double s = 0.3;
  p.first_action = ln_median(30000, s);
  p.iei[idx(EventKind::Click)] = ln_median(20000, s);
  p.iei[idx(EventKind::Keydown)] = ln_median(15, s);
  p.iei[idx(EventKind::Scroll)] = ln_median(20, s);
  p.iei[idx(EventKind::Focus)] = ln_median(25000, s);
  p.iei[idx(EventKind::Navigate)] = ln_median(40000, s);
  p.iei[idx(EventKind::BeforeUnload)] = ln_median(5, s);
  set_mix(p, 0.05, 0.55, 0.35, 0.05);
  p.click_center_x = 1200;
  p.click_center_y = 20;
  p.click_std = 10;
  p.link_click_prob = 1.0;
  p.structural_key_prob = 1.0;
  p.popstate_prob = 1.0;
  p.scroll_step_mean = 90;
  p.scroll_step_std = 5;
  p.scroll_reversal_prob = 0.95;
  out.push_back(p);
  return out;
}

}  // namespace

std::map<std::string, std::vector<AgentProfile>> preset_suites() {
  return {{"separable14", separable14()},
          {"timing-only", timing_only()},
          {"action-only", action_only()},
          {"clone-pair", clone_pair()},
          {"extreme", extreme()}};
}

std::vector<AgentProfile> preset_suite(const std::string& name) {
  auto suites = preset_suites();
  const auto it = suites.find(name);
  if (it == suites.end()) {
    std::string known;
    for (const auto& [k, v] : suites) known += (known.empty() ? "" : ", ") + k;
    throw ConfigError("unknown suite '" + name + "' (known: " + known + ")");
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// YAML

namespace {

constexpr std::array<EventKind, 4> kActionKinds = {EventKind::Click, EventKind::Keydown,
                                                   EventKind::Scroll, EventKind::Focus};

double num(const YAML::Node& node, const char* key, double fallback) {
  const auto v = node[key];
  return v ? v.as<double>() : fallback;
}

LogNormal read_ln(const YAML::Node& node, const LogNormal& fallback) {
  if (!node) return fallback;
  return {num(node, "mu", fallback.mu), num(node, "sigma", fallback.sigma)};
}

CountDist read_count(const YAML::Node& node, const CountDist& fallback) {
  if (!node) return fallback;
  return {num(node, "mean", fallback.mean), num(node, "dispersion", fallback.dispersion)};
}

void check_keys(const YAML::Node& node, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  if (!node) return;
  if (!node.IsMap()) throw ConfigError(where + " must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

AgentProfile read_profile(const YAML::Node& n) {
  check_keys(n,
             {"agent_id", "model_name", "first_action_ms", "iei_ms", "action_mix",
              "click", "scroll", "structural_key_prob", "popstate_prob", "pages",
              "events"},
             "profile");
  if (!n["agent_id"]) throw ConfigError("profile without agent_id");
  AgentProfile p = base_profile(n["agent_id"].as<std::string>());
  p.model_name = n["model_name"] ? n["model_name"].as<std::string>() : p.model_name;
  const std::string where = "profile '" + p.agent_id + "'";
  p.first_action = read_ln(n["first_action_ms"], p.first_action);
  if (const auto iei = n["iei_ms"]) {
    check_keys(iei, {"click", "keydown", "scroll", "navigate", "beforeunload", "focus"},
               where + " iei_ms");
    for (auto k : kAllEventKinds) {
      p.iei[idx(k)] = read_ln(iei[std::string(to_string(k))], p.iei[idx(k)]);
    }
  }
  if (const auto mix = n["action_mix"]) {
    check_keys(mix, {"click", "keydown", "scroll", "focus"}, where + " action_mix");
    p.action_mix.fill(0.0);
    for (auto k : kActionKinds) {
      p.action_mix[idx(k)] = num(mix, std::string(to_string(k)).c_str(), 0.0);
    }
  }
  if (const auto c = n["click"]) {
    check_keys(c, {"center_x", "center_y", "std", "link_prob"}, where + " click");
    p.click_center_x = num(c, "center_x", p.click_center_x);
    p.click_center_y = num(c, "center_y", p.click_center_y);
    p.click_std = num(c, "std", p.click_std);
    p.link_click_prob = num(c, "link_prob", p.link_click_prob);
  }
  if (const auto s = n["scroll"]) {
    check_keys(s, {"step_mean", "step_std", "reversal_prob"}, where + " scroll");
    p.scroll_step_mean = num(s, "step_mean", p.scroll_step_mean);
    p.scroll_step_std = num(s, "step_std", p.scroll_step_std);
    p.scroll_reversal_prob = num(s, "reversal_prob", p.scroll_reversal_prob);
  }
  p.structural_key_prob = num(n, "structural_key_prob", p.structural_key_prob);
  p.popstate_prob = num(n, "popstate_prob", p.popstate_prob);
  p.pages = read_count(n["pages"], p.pages);
  p.events = read_count(n["events"], p.events);
  p.validate();
  return p;
}

void emit_ln(YAML::Emitter& e, const LogNormal& ln) {
  e << YAML::Flow << YAML::BeginMap << YAML::Key << "mu" << YAML::Value << ln.mu
    << YAML::Key << "sigma" << YAML::Value << ln.sigma << YAML::EndMap;
}

void emit_count(YAML::Emitter& e, const CountDist& c) {
  e << YAML::Flow << YAML::BeginMap << YAML::Key << "mean" << YAML::Value << c.mean
    << YAML::Key << "dispersion" << YAML::Value << c.dispersion << YAML::EndMap;
}

}  // namespace

std::vector<AgentProfile> parse_profiles(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("profile file: ") + e.what());
  }
  try {
    check_keys(root, {"version", "profiles"}, "profile file");
    if (root["version"] && root["version"].as<int>() != 1) {
      throw ConfigError("unsupported profile file version");
    }
    const auto list = root["profiles"];
    if (!list || !list.IsSequence()) {
      throw ConfigError("profile file needs a 'profiles' sequence");
    }
    std::vector<AgentProfile> out;
    std::set<std::string> ids;
    for (const auto& n : list) {
      out.push_back(read_profile(n));
      if (!ids.insert(out.back().agent_id).second) {
        throw ConfigError("duplicate agent_id '" + out.back().agent_id + "'");
      }
    }
    return out;
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("profile file: ") + e.what());
  }
}

std::string emit_profiles(const std::vector<AgentProfile>& profiles) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap << YAML::Key << "version" << YAML::Value << 1;
  e << YAML::Key << "profiles" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : profiles) {
    e << YAML::BeginMap;
    e << YAML::Key << "agent_id" << YAML::Value << p.agent_id;
    e << YAML::Key << "model_name" << YAML::Value << p.model_name;
    e << YAML::Key << "first_action_ms" << YAML::Value;
    emit_ln(e, p.first_action);
    e << YAML::Key << "iei_ms" << YAML::Value << YAML::BeginMap;
    for (auto k : kAllEventKinds) {
      e << YAML::Key << std::string(to_string(k)) << YAML::Value;
      emit_ln(e, p.iei[idx(k)]);
    }
    e << YAML::EndMap;
    e << YAML::Key << "action_mix" << YAML::Value << YAML::Flow << YAML::BeginMap;
    for (auto k : kActionKinds) {
      e << YAML::Key << std::string(to_string(k)) << YAML::Value << p.action_mix[idx(k)];
    }
    e << YAML::EndMap;
    e << YAML::Key << "click" << YAML::Value << YAML::Flow << YAML::BeginMap
      << YAML::Key << "center_x" << YAML::Value << p.click_center_x << YAML::Key
      << "center_y" << YAML::Value << p.click_center_y << YAML::Key << "std"
      << YAML::Value << p.click_std << YAML::Key << "link_prob" << YAML::Value
      << p.link_click_prob << YAML::EndMap;
    e << YAML::Key << "scroll" << YAML::Value << YAML::Flow << YAML::BeginMap
      << YAML::Key << "step_mean" << YAML::Value << p.scroll_step_mean << YAML::Key
      << "step_std" << YAML::Value << p.scroll_step_std << YAML::Key
      << "reversal_prob" << YAML::Value << p.scroll_reversal_prob << YAML::EndMap;
    e << YAML::Key << "structural_key_prob" << YAML::Value << p.structural_key_prob;
    e << YAML::Key << "popstate_prob" << YAML::Value << p.popstate_prob;
    e << YAML::Key << "pages" << YAML::Value;
    emit_count(e, p.pages);
    e << YAML::Key << "events" << YAML::Value;
    emit_count(e, p.events);
    e << YAML::EndMap;
  }
  e << YAML::EndSeq << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

std::vector<AgentProfile> load_profiles(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_profiles(ss.str());
}

void save_profiles(const fs::path& path, const std::vector<AgentProfile>& profiles) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << emit_profiles(profiles);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace agentfp
