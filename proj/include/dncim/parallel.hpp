#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "dncim/error.hpp"

namespace dncim {

/// Worker count: explicit value if positive, else DNC_IM_WORKERS, else the
/// hardware concurrency.
inline unsigned resolve_workers(int requested)
{
    if (requested > 0) return static_cast<unsigned>(requested);
    if (const char* env = std::getenv("DNC_IM_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v <= 0)
            throw ConfigError("DNC_IM_WORKERS must be a positive integer, got '" + std::string(env) + "'");
        return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

/// Run fn(i) for i in [0, count) on up to `workers` threads. Tasks are
/// claimed dynamically; callers write results into slot i so output order
/// never depends on scheduling. If tasks throw, the exception from the
/// lowest index is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn)
{
    if (count == 0) return;
    if (workers <= 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    // Tasks above the lowest failed index are skipped; tasks below it always
    // run, so the reported exception is the same for any worker count.
    std::atomic<std::size_t> first_failure{count};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            if (i > first_failure.load(std::memory_order_relaxed)) continue;
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                std::size_t cur = first_failure.load();
                while (i < cur && !first_failure.compare_exchange_weak(cur, i)) {
                }
            }
        }
    };
    const unsigned n_threads = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    std::vector<std::jthread> pool;
    pool.reserve(n_threads - 1);
    for (unsigned t = 1; t < n_threads; ++t)
        pool.emplace_back(worker);
    worker();
    pool.clear();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace dncim
