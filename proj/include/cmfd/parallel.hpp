#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace cmfd {

/// Number of workers to use for a requested thread count (0 = all cores).
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Run fn(i) for i in [begin, end) across at most `threads` workers.
/// Work is split into contiguous blocks, so writes to disjoint per-index
/// slots are race-free and results do not depend on the thread count.
template <typename Fn>
void parallel_for(int begin, int end, int threads, Fn&& fn) {
    const int n = end - begin;
    if (n <= 0) return;
    const int workers = std::min(resolve_threads(threads), n);
    if (workers <= 1) {
        for (int i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int lo = begin + w * chunk;
        const int hi = std::min(lo + chunk, end);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn]() {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace cmfd
