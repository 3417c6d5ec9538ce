#pragma once

#include "comdp/types.hpp"

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace comdp {

inline int default_thread_count() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn over [0, n) split into contiguous chunks, one per thread. Callers
/// guarantee disjoint writes per index, so results are identical for any
/// thread count.
inline void parallel_chunks(Index n, int threads, const std::function<void(Index, Index)>& fn) {
    threads = std::max(1, threads);
    if (n <= 0) return;
    if (threads == 1 || n == 1) {
        fn(0, n);
        return;
    }
    const Index nthreads = std::min<Index>(threads, n);
    const Index chunk = (n + nthreads - 1) / nthreads;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (Index t = 0; t < nthreads; ++t) {
        const Index begin = t * chunk;
        const Index end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace comdp
