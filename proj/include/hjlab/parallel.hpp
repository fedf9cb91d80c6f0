#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace hjlab {

/// Run fn(i) for i in [0, n) on `workers` threads. Work items must write only
/// to their own slots; reductions happen in index order afterwards, so results
/// do not depend on the scheduling.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    auto body = [&] {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    int count = std::min(workers, n);
    pool.reserve(count);
    for (int t = 0; t < count; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
}

}  // namespace hjlab
