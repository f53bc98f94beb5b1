#pragma once

#include <cstddef>
#include <functional>

namespace csol {

// Worker count: COUPLED_SOLITON_THREADS if set and positive, else hardware concurrency.
int thread_count();

// Runs body(begin, end) over a fixed partition of [0, n). The partition depends only on n
// and the chunk size, never on the thread count, so per-chunk results combined in chunk
// order are reproducible.
void parallel_chunks(std::size_t n, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace csol
