// SPDX-License-Identifier: Apache-2.0
#include "lightgcl/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace lightgcl {

namespace {

std::size_t initial_thread_count() {
    if (const char* env = std::getenv("THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

std::atomic<std::size_t>& thread_setting() {
    static std::atomic<std::size_t> n{initial_thread_count()};
    return n;
}

// Below this many rows the thread launch costs more than it saves.
constexpr std::size_t kMinRowsPerWorker = 256;

}  // namespace

std::size_t thread_count() { return thread_setting().load(); }

void set_thread_count(std::size_t n) { thread_setting().store(std::max<std::size_t>(1, n)); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    const std::size_t workers = std::min(thread_count(), std::max<std::size_t>(1, n / kMinRowsPerWorker));
    if (workers <= 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t lo = std::min(n, w * chunk);
        const std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    fn(0, std::min(n, chunk));
    for (auto& t : pool) t.join();
}

}  // namespace lightgcl
