#pragma once

#include <cstddef>
#include <functional>

namespace ispc {

// Worker count for a request: 0 means hardware concurrency. The ISPC_THREADS
// environment variable caps the result. Always at least 1.
int resolve_threads(int requested);

// Runs fn(i) for i in [0, n) across up to `threads` workers. If any call
// throws, the exception from the lowest failing index is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace ispc
