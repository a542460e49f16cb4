#pragma once

#include <cstddef>
#include <functional>

namespace selftrain {

/// Number of worker threads. Honors the SELFTRAIN_WORKERS environment
/// variable when set (values < 1 mean single-threaded); otherwise uses the
/// available hardware concurrency.
std::size_t worker_count();

/// Run fn over [0, n) split into contiguous chunks across worker threads.
/// Chunks are disjoint, so results are identical for any thread count as
/// long as fn writes only to its own index range. Exceptions from workers
/// are rethrown on the calling thread.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t begin, std::size_t end)>& fn);

}  // namespace selftrain
