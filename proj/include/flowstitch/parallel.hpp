#ifndef FLOWSTITCH_PARALLEL_HPP
#define FLOWSTITCH_PARALLEL_HPP

#include <functional>

namespace flowstitch {

// 0 means auto (hardware concurrency, or FLOWSTITCH_THREADS if set).
void set_thread_count(int n);
int thread_count();

// Number of workers actually used for a parallel region.
int resolved_thread_count();

// Runs fn(begin, end) over contiguous row chunks of [0, rows).
// Chunk results must be independent per row so output is identical
// for any thread count.
void parallel_rows(int rows, const std::function<void(int, int)>& fn);

} // namespace flowstitch

#endif
