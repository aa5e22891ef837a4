#pragma once

#include <cstddef>
#include <functional>

namespace rckit {

// Worker cap: min(RC_KIT_THREADS, hardware threads). Values < 1 mean 1.
std::size_t worker_count();

// Runs body(i) for i in [0, n). Work is split in contiguous blocks across
// workers; callers must write results into per-index slots so the outcome is
// identical for any worker count. Nested calls run inline on the calling
// worker. The first exception thrown by a body is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace rckit
