#pragma once

#include <cstddef>
#include <functional>

namespace lanova {

/// Worker count: `requested` if non-zero, else LANOVA_THREADS if set, else
/// the hardware concurrency. Always capped by LANOVA_THREADS when present.
unsigned resolve_threads(unsigned requested = 0);

/// Runs body(i) for i in [0, count) on up to `threads` workers using a
/// static contiguous partition. Each index is visited exactly once; results
/// written to per-index slots are therefore independent of the thread count.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace lanova
