#ifndef ATLA_COMMON_PARALLEL_H_
#define ATLA_COMMON_PARALLEL_H_

#include <functional>

namespace atla {

// Runs fn(0..n-1) on up to `threads` threads. Work items must be independent;
// results are whatever fn writes into caller-owned, per-index slots. The
// first exception thrown by any item is rethrown after all threads join.
void ParallelFor(int n, int threads, const std::function<void(int)>& fn);

}  // namespace atla

#endif  // ATLA_COMMON_PARALLEL_H_
