#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "hatedet/errors.hpp"

namespace hatedet {

/// Retries with exponential backoff: waits base, 2*base, 4*base, ... between
/// attempts. `retries` counts attempts after the first.
struct RetryPolicy {
    int retries = 3;
    std::chrono::milliseconds base_delay{200};
};

/// Runs `fn`, retrying on ProviderError. Other exceptions propagate at once.
/// The final ProviderError is rethrown with the attempt count attached.
template <typename Fn>
auto with_retry(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
    for (int attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (const ProviderError& e) {
            if (attempt >= policy.retries) {
                throw ProviderError(std::string(e.what()) + " (gave up after " + std::to_string(attempt + 1) +
                                    " attempts)");
            }
            std::this_thread::sleep_for(policy.base_delay * (1LL << std::min(attempt, 20)));
        }
    }
}

/// Calls `fn(i)` for i in [0, n) with at most `max_in_flight` calls running at
/// once. Returns after all calls finish; the exception from the lowest index
/// that failed is rethrown.
inline void bounded_parallel_for(std::size_t n, std::size_t max_in_flight, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t workers = std::clamp<std::size_t>(max_in_flight, 1, n);
    std::vector<std::exception_ptr> errors(n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

/// Spaces calls at least 60/rpm seconds apart. rpm <= 0 disables limiting.
class RateLimiter {
public:
    explicit RateLimiter(double requests_per_minute = 0.0) : rpm_(requests_per_minute) {}

    void acquire() {
        if (rpm_ <= 0.0) return;
        const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(60.0 / rpm_));
        std::chrono::steady_clock::time_point slot;
        {
            std::lock_guard lock(mutex_);
            const auto now = std::chrono::steady_clock::now();
            slot = std::max(now, next_);
            next_ = slot + interval;
        }
        std::this_thread::sleep_until(slot);
    }

private:
    double rpm_;
    std::mutex mutex_;
    std::chrono::steady_clock::time_point next_{};
};

}  // namespace hatedet
