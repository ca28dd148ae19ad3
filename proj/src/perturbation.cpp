#include "agentfp/perturbation.hpp"

#include <cstdio>
#include <sstream>

#include "agentfp/error.hpp"
#include "agentfp/ingest.hpp"
#include "agentfp/parallel.hpp"
#include "agentfp/rng.hpp"

namespace agentfp {

DelayBudget::DelayBudget(std::int64_t max_ms) : max_delay_ms(max_ms) {
  if (max_ms <= 0) {
    throw ConfigError("delay budget must be positive, got " + std::to_string(max_ms));
  }
}

std::vector<std::int64_t> delay_draws(const Trace& trace, const DelayBudget& budget,
                                      std::uint64_t seed) {
  Rng rng(derive_seed(seed, trace.meta().episode_id));
  std::uniform_int_distribution<std::int64_t> draw(0, budget.max_delay_ms);
  std::vector<std::int64_t> d(trace.size());
  for (auto& v : d) v = draw(rng);
  return d;
}

Trace inject_delays(const Trace& trace, const DelayBudget& budget, std::uint64_t seed) {
  const auto draws = delay_draws(trace, budget, seed);
  std::vector<Event> events = trace.events();
  std::int64_t shift = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    shift += draws[i];
    events[i].t_ms += shift;
  }
  return Trace(trace.meta(), std::move(events));
}

std::vector<Trace> inject_delays(std::span<const Trace> traces,
                                 const DelayBudget& budget, std::uint64_t seed) {
  std::vector<Trace> out(traces.size());
  parallel_for(traces.size(),
               [&](std::size_t i) { out[i] = inject_delays(traces[i], budget, seed); });
  return out;
}

DelayTable delay_robustness_experiment(std::span<const Trace> train,
                                       std::span<const Trace> test,
                                       const std::vector<std::string>& class_names,
                                       std::span<const std::int64_t> budgets,
                                       const Trainer& trainer, std::uint64_t seed) {
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (budgets[i] <= 0) throw ConfigError("delay budgets must be positive");
    if (i > 0 && budgets[i] <= budgets[i - 1]) {
      throw ConfigError("delay budgets must be strictly ascending");
    }
  }
  const auto clean_train = featurize(train, class_names, Split::Train);
  const auto clean_test = featurize(test, class_names, Split::Test);
  const auto clean_model = trainer(clean_train, seed);

  DelayTable table;
  table.clean_f1 = closed_set_eval(*clean_model, clean_test).macro_f1;
  const std::uint64_t train_stream = derive_seed(seed, "delay-train");
  const std::uint64_t test_stream = derive_seed(seed, "delay-test");
  for (auto b : budgets) {
    const DelayBudget budget(b);
    const auto u = static_cast<std::uint64_t>(b);
    const auto delayed_test = featurize(
        inject_delays(test, budget, derive_seed(test_stream, u)), class_names, Split::Test);
    const auto delayed_train =
        featurize(inject_delays(train, budget, derive_seed(train_stream, u)),
                  class_names, Split::Train);
    const auto adapted = trainer(delayed_train, seed);
    table.rows.push_back({b, closed_set_eval(*clean_model, delayed_test).macro_f1,
                          closed_set_eval(*adapted, delayed_test).macro_f1});
  }
  return table;
}

nlohmann::ordered_json to_json(const DelayTable& table) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"budget_ms", r.budget_ms},
                    {"unadapted_f1", r.unadapted_f1},
                    {"adapted_f1", r.adapted_f1}});
  }
  return {{"clean_f1", table.clean_f1}, {"budgets", rows}};
}

std::string format_table(const DelayTable& table) {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-10s  %12s  %10s\n", "budget_ms", "unadapted_f1",
                "adapted_f1");
  out << buf;
  std::snprintf(buf, sizeof buf, "%-10s  %12.4f  %10.4f\n", "clean", table.clean_f1,
                table.clean_f1);
  out << buf;
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof buf, "%-10lld  %12.4f  %10.4f\n",
                  static_cast<long long>(r.budget_ms), r.unadapted_f1, r.adapted_f1);
    out << buf;
  }
  return out.str();
}

}  // namespace agentfp
