#pragma once

#include <cstddef>
#include <functional>

namespace varflow {

/// Worker count used by parallel_for. Initialized from VARFLOW_THREADS
/// (0 or unset means hardware concurrency).
unsigned thread_count();
void set_thread_count(unsigned count);

/// Runs body(i) for i in [0, count). Work is split into contiguous blocks;
/// callers must write results by index so output never depends on the split.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace varflow
