#ifndef LAB_PARALLEL_HPP
#define LAB_PARALLEL_HPP

// Thread helpers.  LAB_THREADS caps the worker count (default: hardware
// concurrency).  parallel_for partitions [0,n) into contiguous blocks, one
// worker per block; callers keep determinism by writing results into
// preallocated slots and reducing in index order afterwards.

#include <cstddef>
#include <functional>

namespace lab {

// Number of workers to use (>= 1).  Reads LAB_THREADS once per call.
int worker_count();

// Invoke fn(begin, end) on contiguous index ranges covering [0, n).
// fn runs on the calling thread when only one worker is active.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace lab

#endif
