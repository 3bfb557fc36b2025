#pragma once

#include <cstddef>
#include <functional>

namespace fast {

/// Worker cap: FAST_THREADS env var if set (>= 1), else hardware concurrency.
std::size_t worker_count();

/// Runs fn(begin, end) over static chunks of [0, n). Workers write results
/// into caller-owned slots indexed by position, so the outcome is identical
/// for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace fast
