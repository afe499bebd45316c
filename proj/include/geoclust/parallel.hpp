#pragma once

#include <cstddef>
#include <functional>

namespace geoclust {

// Worker thread cap: GEOCLUST_THREADS when set (>=1), else hardware
// parallelism. Read on every call so tests can vary it within one process.
std::size_t max_threads();

// Runs fn(chunk_index, begin, end) over [0,n) split into fixed-size chunks.
// The chunk layout depends only on n and chunk_size, never on the thread
// count, so per-chunk partial results merged in chunk order give bit-identical
// totals at any parallelism level. Chunks are dispatched to worker threads;
// falls back to a serial loop for small n or a thread cap of 1.
void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
    return n == 0 ? 0 : (n + chunk_size - 1) / chunk_size;
}

}  // namespace geoclust
