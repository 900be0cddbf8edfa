#pragma once

#include <cstddef>
#include <functional>

namespace plprep {

// Runs fn(index, worker) for index in [0, count) on `threads` workers
// (worker < threads). Tasks are claimed dynamically, so callers must make
// results independent of the claiming order. The exception of the smallest
// failing index is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace plprep
