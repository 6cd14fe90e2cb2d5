#pragma once

#include <cstddef>
#include <functional>

namespace effreg {

// Worker cap: EFFREG_THREADS if set (minimum 1), else hardware concurrency.
unsigned max_threads();

// Runs fn over disjoint contiguous ranges covering [0, n). Workers must
// write only to their own output slots; all reductions happen afterwards in
// index order, so results are byte-identical for every thread count.
// Nested calls run serially on the caller's thread.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn);

// Same with an explicit worker count (tests and the determinism harness).
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn,
                  unsigned threads);

} // namespace effreg
