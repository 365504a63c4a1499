#pragma once

#include <cstddef>
#include <functional>

namespace xaudit {

// Worker cap for parallel_for. 0 means "auto": the XAUDIT_THREADS environment
// variable if set (0 = hardware concurrency), else hardware concurrency.
void set_thread_cap(int cap);
int resolve_thread_count(std::size_t n_items);

// Runs fn(i) for i in [0, n). Work items must not depend on each other;
// callers are responsible for writing results into index-addressed slots so
// that outputs never depend on scheduling. The first exception thrown by any
// worker is rethrown on the calling thread after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace xaudit
