#pragma once

#include <cstddef>
#include <functional>

namespace diftrans {

/// Environment variable that caps worker threads.
inline constexpr const char* kThreadsEnv = "DIFTRANS_THREADS";

/// Number of workers to use: `requested` (0 means hardware concurrency),
/// capped by DIFTRANS_THREADS when set, never below one.
unsigned resolve_threads(unsigned requested = 0);

/// Calls body(i) for every i in [0, n) on up to `threads` workers. Distinct
/// indices may run concurrently; the first exception thrown is rethrown.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace diftrans
