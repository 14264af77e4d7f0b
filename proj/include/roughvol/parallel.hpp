#pragma once

#include <cstddef>
#include <functional>

namespace roughvol {

// Worker cap: explicit setting, else ROUGHVOL_THREADS, else hardware threads.
int worker_count();
void set_worker_count(int n);

// Runs body(i) for i in [0, n) on up to worker_count() threads. Each index is
// executed exactly once; callers write results into per-index slots so the
// outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace roughvol
