// Copyright 2026 The QCN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace qcn {

/// Worker count: QCN_THREADS env var if set, else hardware concurrency.
inline unsigned worker_count() {
    if (const char* env = std::getenv("QCN_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

namespace detail {
inline thread_local bool inside_parallel_region = false;
}

/// Runs fn(0..n-1) on a worker pool. Each index is processed exactly
/// once; fn must be safe to call concurrently for distinct indices.
/// Nested calls run serially, so outer loops own the parallelism.
/// The result of a run is independent of the worker count.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    const unsigned workers =
        detail::inside_parallel_region
            ? 1u
            : std::min<unsigned>(worker_count(), static_cast<unsigned>(n));
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        detail::inside_parallel_region = true;
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
        detail::inside_parallel_region = false;
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace qcn
