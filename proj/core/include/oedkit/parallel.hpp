#pragma once

#include <functional>

namespace oedkit {

// Runs fn(i) for every i in [0, n) on up to n_threads worker threads.
// Work items are claimed from a shared atomic counter, so callers must write
// results into per-index slots; outputs then do not depend on the schedule.
// The first exception thrown by any worker is rethrown on the calling thread.
void parallel_for(int n, int n_threads, const std::function<void(int)>& fn);

}  // namespace oedkit
