#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace fracle {

// Process-wide worker count; 1 means run inline.
inline std::atomic<int>& threadCount() {
    static std::atomic<int> n{1};
    return n;
}

// Runs body(i) for i in [0, count). Each index writes only its own output, so
// results do not depend on the number of workers.
template <class Body> void parallelFor(int count, Body&& body) {
    const int workers = std::clamp(threadCount().load(), 1, std::max(1, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto run = [&] {
        try {
            for (int i = next++; i < count && !failed; i = next++) body(i);
        } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace fracle
