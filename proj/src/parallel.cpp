#include "geoclust/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace geoclust {

std::size_t max_threads() {
    if (const char* env = std::getenv("GEOCLUST_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (chunk_size == 0) chunk_size = 1;
    const std::size_t nchunks = chunk_count(n, chunk_size);

    auto run_chunk = [&](std::size_t ci) {
        std::size_t begin = ci * chunk_size;
        std::size_t end = begin + chunk_size;
        if (end > n) end = n;
        fn(ci, begin, end);
    };

    std::size_t workers = max_threads();
    if (workers > nchunks) workers = nchunks;
    if (workers <= 1) {
        for (std::size_t ci = 0; ci < nchunks; ++ci) run_chunk(ci);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                std::size_t ci = next.fetch_add(1);
                if (ci >= nchunks || failed.load()) return;
                try {
                    run_chunk(ci);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace geoclust
