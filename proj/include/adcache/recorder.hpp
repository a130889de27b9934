#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "adcache/clock.hpp"
#include "adcache/hints.hpp"
#include "adcache/trace.hpp"
#include "adcache/value.hpp"

namespace adcache {

struct RecorderConfig {
    std::size_t buffer_capacity = 1 << 16;
    double sampling_rate = 1.0; // per-invocation Bernoulli, in (0,1]
    std::string sink_path;      // JSONL trace log appended on drain; empty = none
};

/// The call gateway applications wrap expensive invocations with. Runs the
/// deferred computation, measures its wall-clock cost on the injected clock
/// and buffers a CallRecord off the request path. Thunk errors propagate
/// unchanged and leave no record; values outside the supported universe
/// downgrade the method to untracked pass-through.
class Recorder {
public:
    Recorder(RecorderConfig config, std::shared_ptr<Clock> clock, std::uint64_t seed = 0x5eed);

    /// Execute the thunk and, if this method is tracked and the sampling
    /// coin succeeds, enqueue a record. sampling_scale multiplies the
    /// configured rate (the controller records demoted methods at a reduced
    /// rate). Returns the thunk's value untouched.
    Value invoke_tracked(const MethodId& method, const std::vector<Value>& params,
                         const std::optional<std::string>& session,
                         const std::function<Value()>& thunk, double sampling_scale = 1.0);

    /// Enqueue an already-built record, subject to sampling unless forced.
    /// Used by the controller when it has measured the call itself.
    void record(CallRecord rec, double sampling_scale = 1.0, bool force = false);

    /// Remove and return all buffered records in arrival order. Every
    /// enqueued record appears in exactly one drain result.
    std::vector<CallRecord> drain();

    /// Replace the hint set atomically. Throws DuplicateHintError if a
    /// method appears twice.
    void set_hints(const std::vector<TrackingHint>& hints);

    std::optional<HintMode> hint_for(const MethodId& method) const;

    std::shared_ptr<const std::map<MethodId, HintMode>> hints() const;

    struct Counters {
        std::uint64_t enqueued = 0;
        std::uint64_t dropped = 0;               // buffer overflow, newest dropped
        std::uint64_t unsupported_downgrades = 0; // calls skipped for opaque values
    };
    Counters counters() const;

    const RecorderConfig& config() const { return config_; }
    Clock& clock() { return *clock_; }

private:
    bool sampling_pass(double scale);
    void note_unsupported(const MethodId& method);

    RecorderConfig config_;
    std::shared_ptr<Clock> clock_;

    mutable std::mutex buffer_mu_;
    std::deque<CallRecord> buffer_;
    Counters counters_;
    std::set<std::string> downgraded_methods_;

    mutable std::mutex rng_mu_;
    std::mt19937_64 rng_;

    mutable std::mutex hints_mu_;
    std::shared_ptr<const std::map<MethodId, HintMode>> hints_;
};

} // namespace adcache
