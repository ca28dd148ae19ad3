#pragma once

#include <cstddef>
#include <functional>

namespace agentfp {

// Worker count used by parallel_for. Defaults to hardware concurrency.
void set_thread_count(std::size_t n);
std::size_t thread_count();

// Runs body(i) for i in [0, n). Callers write into per-index slots so the
// result never depends on scheduling. The first exception thrown by any body
// is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace agentfp
