#pragma once

#include <cstddef>
#include <functional>

namespace tame {

/// Process-wide default worker count (CLI --jobs lands here). 0 = all cores.
void set_default_jobs(int jobs);
int default_jobs();

/// Static contiguous partition of [0, n) over worker threads. Each index is
/// handled exactly once and results must be written to per-index slots, so
/// output never depends on the worker count. Exceptions are rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int jobs = 0);

} // namespace tame
