#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "agentfp/ingest.hpp"
#include "agentfp/trace.hpp"

namespace agentfp {

// Log-normal in log-milliseconds.
struct LogNormal {
  double mu = 0.0;
  double sigma = 1.0;

  double mean() const;
  bool operator==(const LogNormal&) const = default;
};

// Negative binomial by mean and dispersion (gamma-Poisson size parameter).
struct CountDist {
  double mean = 1.0;
  double dispersion = 1.0;

  bool operator==(const CountDist&) const = default;
};

// Behavioural distributions of one synthetic agent.
struct AgentProfile {
  std::string agent_id;
  std::string model_name;
  LogNormal first_action;  // delay before the first event
  // Gap preceding an event, by the event's kind.
  std::array<LogNormal, kEventKindCount> iei;
  // Weights over click, keydown, scroll and focus. Navigate and
  // beforeunload come from page transitions and must weigh 0.
  std::array<double, kEventKindCount> action_mix{};
  double click_center_x = kViewportWidth / 2;
  double click_center_y = kViewportHeight / 2;
  double click_std = 150.0;
  double link_click_prob = 0.3;
  double scroll_step_mean = 20.0;
  double scroll_step_std = 8.0;
  double scroll_reversal_prob = 0.2;
  double structural_key_prob = 0.2;
  double popstate_prob = 0.1;
  CountDist pages{3.0, 3.0};
  CountDist events{60.0, 3.0};  // actions, excluding page transitions

  // Throws ConfigError naming the first violated constraint.
  void validate() const;
  bool operator==(const AgentProfile&) const = default;
};

// One episode: 1 + NB(events) actions with kinds drawn from the action mix,
// and 1 + NB(pages) pages whose transitions (beforeunload then navigate)
// fall at uniformly drawn positions. Scroll depth follows a bounded walk that
// restarts at 0 on every page.
Trace generate_trace(const AgentProfile& profile, std::uint64_t seed,
                     const std::string& episode_id = "");

struct EpisodeCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

inline constexpr std::string_view kSimDataset = "sim";

struct SimulatedCorpus {
  std::vector<Trace> traces;  // agent-major, then train, val, test
  SplitManifest manifest;
};

// Episode ids are "<agent>-<split>-<index>"; each episode's seed is derived
// from (seed, episode id). Throws ConfigError on duplicate agent ids.
SimulatedCorpus simulate_corpus(const std::vector<AgentProfile>& profiles,
                                EpisodeCounts counts, std::uint64_t seed);

// Writes simulate_corpus output in the canonical layout below `root`, with
// the split manifest at <root>/splits.json. Returns the number of episode
// files written.
std::size_t generate_corpus(const std::vector<AgentProfile>& profiles,
                            EpisodeCounts counts, std::uint64_t seed,
                            const std::filesystem::path& root);

// Named profile sets: separable14, timing-only, action-only, clone-pair and
// extreme.
std::map<std::string, std::vector<AgentProfile>> preset_suites();
// Throws ConfigError for an unknown name.
std::vector<AgentProfile> preset_suite(const std::string& name);

// Profile files are YAML; see docs/profiles.md.
std::vector<AgentProfile> parse_profiles(const std::string& yaml_text);
std::string emit_profiles(const std::vector<AgentProfile>& profiles);
std::vector<AgentProfile> load_profiles(const std::filesystem::path& path);
void save_profiles(const std::filesystem::path& path,
                   const std::vector<AgentProfile>& profiles);

}  // namespace agentfp
