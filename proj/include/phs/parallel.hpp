#pragma once

#include <cstddef>
#include <functional>

namespace phs {

/// Worker count: PHS_LEARN_THREADS if set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads using
/// contiguous static chunks. Results must be written to per-index slots so
/// the outcome does not depend on the thread count. The exception thrown for
/// the smallest index is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace phs
