#pragma once

#include <cstddef>
#include <functional>

namespace thermoflow {

// Worker count: explicit value if positive, else THERMOFLOW_THREADS, else 1.
int resolve_threads(int requested);

// Calls body(i) for i in [begin, end) split into contiguous chunks, one per
// worker. Each index is written by exactly one worker, so results stored by
// index are identical for any thread count.
void parallel_for(std::size_t begin, std::size_t end, int threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace thermoflow
