#pragma once
#include <cstddef>
#include <functional>

namespace dcglasso {

/// Worker count from DCGLASSO_WORKERS, else the hardware concurrency (>= 1).
int default_workers();

/// Runs fn(0..count-1) on up to `workers` threads. Each index runs exactly
/// once; the first exception by index is rethrown after all threads join.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

} // namespace dcglasso
