#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "agentfp/evaluation.hpp"
#include "agentfp/trace.hpp"

namespace agentfp {

// Uniform integer delays on [0, max_delay_ms].
struct DelayBudget {
  std::int64_t max_delay_ms = 0;

  // Throws ConfigError unless max_delay_ms > 0.
  explicit DelayBudget(std::int64_t max_ms);
};

// Draws one delay per event from a stream seeded by (seed, episode_id).
// Draw 0 delays the first event; draw i widens the gap before event i.
// Every timestamp shifts by the running sum of its draws, so order, kinds
// and payloads are untouched.
Trace inject_delays(const Trace& trace, const DelayBudget& budget, std::uint64_t seed);

// The draws inject_delays would use for `trace`.
std::vector<std::int64_t> delay_draws(const Trace& trace, const DelayBudget& budget,
                                      std::uint64_t seed);

std::vector<Trace> inject_delays(std::span<const Trace> traces,
                                 const DelayBudget& budget, std::uint64_t seed);

struct DelayRow {
  std::int64_t budget_ms = 0;
  double unadapted_f1 = 0.0;
  double adapted_f1 = 0.0;
};

struct DelayTable {
  double clean_f1 = 0.0;
  std::vector<DelayRow> rows;
};

// Clean model: trained on clean train traces. For each budget the test
// traces are delayed once; "unadapted" scores the clean model on them and
// "adapted" scores a model retrained on train traces delayed with an
// independent stream. Throws ConfigError unless budgets are positive and
// strictly ascending.
DelayTable delay_robustness_experiment(std::span<const Trace> train,
                                       std::span<const Trace> test,
                                       const std::vector<std::string>& class_names,
                                       std::span<const std::int64_t> budgets,
                                       const Trainer& trainer, std::uint64_t seed);

nlohmann::ordered_json to_json(const DelayTable& table);
std::string format_table(const DelayTable& table);

}  // namespace agentfp
