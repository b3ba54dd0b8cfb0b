#pragma once

#include <functional>

namespace gcstar {

// Worker cap: min(hardware_concurrency, GCSTAR_THREADS when set).
int worker_count();

// Runs body(0..n-1) across workers.  Each index writes only its own slot,
// so results are identical for any worker count.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace gcstar
