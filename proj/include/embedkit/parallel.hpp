#pragma once

#include <cstddef>
#include <functional>

namespace embedkit {

/// Worker count from EMBEDKIT_THREADS (unset or 0 = hardware concurrency).
std::size_t thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. Each index
/// is visited exactly once; callers write results into per-index slots so the
/// outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace embedkit
