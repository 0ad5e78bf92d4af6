#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace layercut {

/// Worker cap: hardware concurrency, clamped by the LAYERCUT_THREADS
/// environment variable when set.
inline int max_threads() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    if (const char* env = std::getenv("LAYERCUT_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) n = std::min(n, cap);
    }
    return n;
}

/// Chunked parallel loop over [0, count). Each index is processed exactly
/// once; callers write disjoint output slots, so results are independent of
/// the thread count.
inline void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& body) {
    const int workers = std::min<std::int64_t>(max_threads(), count);
    if (workers <= 1) {
        for (std::int64_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::int64_t chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::int64_t begin = w * chunk;
        const std::int64_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&body, begin, end] {
            for (std::int64_t i = begin; i < end; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace layercut
