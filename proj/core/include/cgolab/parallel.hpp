#pragma once

#include <cstddef>
#include <functional>

namespace cgolab {

// Worker count: hardware concurrency, capped by CGOLAB_THREADS when set.
unsigned worker_count();

// Runs body(i) for i in [0, count). Iterations are handed out in contiguous
// blocks; body must only write to per-index storage.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace cgolab
