#pragma once

#include "bladerunner/landmarks.hpp"

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bladerunner::detail {

// Calls fn(index, backend) for every index in [0, count) using up to `jobs`
// threads, each with its own clone of `prototype`. Callers write results by
// index, so output order never depends on scheduling.
template <typename Fn>
void for_each_with_backend(std::size_t count, int jobs, const LandmarkBackend& prototype, Fn&& fn) {
    if (count == 0) return;
    const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, count);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    const auto work = [&] {
        try {
            auto backend = prototype.clone();
            for (std::size_t i = next++; i < count; i = next++) {
                fn(i, *backend);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = count;
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
        for (auto& t : threads) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace bladerunner::detail
