#pragma once

#include <functional>

namespace hmfg {

// Worker count: `requested` if positive, else HMFG_WORKERS, else the hardware concurrency.
int worker_count(int requested = 0);

// Runs fn(0..n-1) on up to `workers` threads. Indices are handed out in order;
// the first exception thrown by any task is rethrown after all threads join.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace hmfg
