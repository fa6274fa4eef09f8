#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace spinkubo {

// Bounded worker count used by parallel_for; set from the CLI --threads flag.
inline std::atomic<int>& worker_threads() {
    static std::atomic<int> n{1};
    return n;
}

inline void set_worker_threads(int n) {
    worker_threads().store(n < 1 ? 1 : n);
}

// Runs fn(i) for i in [0, count). Each index writes only its own slot, so the
// result is identical for any thread count.
inline void parallel_for(int count, const std::function<void(int)>& fn) {
    const int threads = std::min(worker_threads().load(), count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace spinkubo
