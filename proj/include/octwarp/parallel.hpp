// parallel.hpp — chunked parallel_for over an index range.
//
// Work is split into one contiguous block per worker, so the assignment of
// iterations to threads is a pure function of (range, thread count). With
// n_threads == 1 everything runs inline on the calling thread.

#pragma once

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace octwarp {

inline int hardware_threads()
{
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

/// fn(begin, end, worker_index) is called once per worker on its block.
inline void parallel_for_blocks(int64_t begin, int64_t end, int n_threads,
                                const std::function<void(int64_t, int64_t, int)>& fn)
{
    const int64_t count = end - begin;
    if (count <= 0) return;
    int workers = n_threads;
    if (workers < 1) workers = 1;
    if (workers > count) workers = static_cast<int>(count);
    if (workers == 1) {
        fn(begin, end, 0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int t = 0; t < workers; ++t) {
        const int64_t lo = begin + count * t / workers;
        const int64_t hi = begin + count * (t + 1) / workers;
        if (t + 1 == workers) {
            fn(lo, hi, t);
        } else {
            pool.emplace_back([=, &fn] { fn(lo, hi, t); });
        }
    }
    for (auto& th : pool) th.join();
}

/// Element-wise variant.
inline void parallel_for(int64_t begin, int64_t end, int n_threads,
                         const std::function<void(int64_t)>& fn)
{
    parallel_for_blocks(begin, end, n_threads, [&](int64_t lo, int64_t hi, int) {
        for (int64_t i = lo; i < hi; ++i) fn(i);
    });
}

} // namespace octwarp
