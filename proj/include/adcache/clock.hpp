#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>

namespace adcache {

/// Monotonic time source, microsecond resolution. Injectable so cache TTL,
/// cost measurement and mining schedules can run on simulated time in tests
/// and in the workload simulator.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::uint64_t now_us() = 0;
};

/// Wall clock backed by std::chrono::steady_clock.
class SystemClock final : public Clock {
public:
    std::uint64_t now_us() override {
        const auto d = std::chrono::steady_clock::now().time_since_epoch();
        return static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::microseconds>(d).count());
    }
};

/// Simulated clock; never moves unless told to.
class VirtualClock final : public Clock {
public:
    explicit VirtualClock(std::uint64_t start_us = 0) : t_(start_us) {}

    std::uint64_t now_us() override { return t_.load(std::memory_order_relaxed); }

    void advance_us(std::uint64_t delta) { t_.fetch_add(delta, std::memory_order_relaxed); }

    /// Jump to an absolute time. Never moves backwards.
    void set_us(std::uint64_t t) {
        std::uint64_t cur = t_.load(std::memory_order_relaxed);
        while (t > cur && !t_.compare_exchange_weak(cur, t, std::memory_order_relaxed)) {
        }
    }

private:
    std::atomic<std::uint64_t> t_;
};

} // namespace adcache
