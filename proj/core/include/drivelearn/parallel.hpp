#pragma once

#include <cstddef>
#include <functional>

namespace drivelearn {

/// Calls fn(i) once for every i in [0, n) using up to `workers` threads.
/// Callers write results into per-index slots, so the outcome does not
/// depend on the thread count. The exception of the lowest failing index is
/// rethrown after all threads finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace drivelearn
