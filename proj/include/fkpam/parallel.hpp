#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fkpam {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Tasks are claimed
/// from an atomic counter; callers must write results into per-index slots so
/// that the final reduction order does not depend on the worker count.
template <typename F>
void parallel_for(std::size_t n, unsigned workers, F&& fn) {
    if (n == 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    unsigned nthreads = workers == 0 ? hw : workers;
    if (nthreads > n) nthreads = static_cast<unsigned>(n);

    if (nthreads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto body = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(nthreads);
    for (unsigned k = 0; k < nthreads; ++k) threads.emplace_back(body);
    for (auto& th : threads) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace fkpam
