#pragma once

#include <cstddef>
#include <functional>

namespace resochain {

/// Worker count: RESOCHAIN_THREADS when set to a positive integer, else the
/// hardware concurrency (at least 1).
std::size_t default_thread_count();

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 selects
/// default_thread_count()). The first exception thrown by any task is
/// rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t threads = 0);

}  // namespace resochain
