#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mci {

inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    return std::max(1U, std::thread::hardware_concurrency());
}

/// Runs fn(i, worker) for i in [begin, end). Workers pull fixed-size chunks
/// from a shared atomic cursor. With threads == 1 everything runs inline in
/// ascending order.
template <class Fn>
void parallel_for(std::size_t begin, std::size_t end, unsigned threads, Fn&& fn,
                  std::size_t chunk = 64) {
    threads = resolve_threads(threads);
    if (end <= begin) return;
    if (threads == 1 || end - begin <= chunk) {
        for (std::size_t i = begin; i < end; ++i) fn(i, 0U);
        return;
    }
    std::atomic<std::size_t> cursor{begin};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto work = [&](unsigned worker) {
        try {
            for (;;) {
                const std::size_t lo = cursor.fetch_add(chunk, std::memory_order_relaxed);
                if (lo >= end) break;
                const std::size_t hi = std::min(end, lo + chunk);
                for (std::size_t i = lo; i < hi; ++i) fn(i, worker);
            }
        } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
            cursor.store(end);
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(threads - 1);
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work, t);
    work(0);
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace mci
