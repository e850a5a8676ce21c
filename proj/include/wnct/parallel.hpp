#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace wnct {

/// Process-wide worker count. 1 (the default) guarantees bitwise-reproducible
/// runs; larger values only parallelize loops whose iterations write disjoint
/// output ranges, so results stay deterministic for a fixed thread count.
inline int& thread_count() {
    static int n = 1;
    return n;
}

inline void set_thread_count(int n) { thread_count() = std::max(1, n); }

template <typename Fn>
void parallel_for(std::int64_t begin, std::int64_t end, Fn&& fn) {
    const std::int64_t total = end - begin;
    const int workers = std::min<std::int64_t>(thread_count(), total);
    if (workers <= 1) {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(workers));
    const std::int64_t chunk = (total + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
        std::int64_t lo = begin + t * chunk;
        std::int64_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace wnct
