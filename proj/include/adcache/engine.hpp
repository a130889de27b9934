#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "adcache/cache.hpp"
#include "adcache/clock.hpp"
#include "adcache/miner.hpp"
#include "adcache/recorder.hpp"

namespace adcache {

struct EngineConfig {
    RecorderConfig recorder;
    CacheConfig cache;
    CriteriaThresholds thresholds;
    std::uint64_t mining_interval_us = 60'000'000;
    std::uint64_t warmup_window_us = 120'000'000; // traces needed before first real model
    double window_intervals = 2.0;                // sliding trace window, in mining intervals
    double recheck_sampling_rate = 0.1;           // demoted methods keep this much tracking
    std::uint64_t seed = 0x5eed;
};

/// Parse an INI-style config file mapping one-to-one onto EngineConfig (see
/// README for the key list). Throws ConfigError.
EngineConfig load_engine_config(const std::string& path);
EngineConfig parse_engine_config(const std::string& text);

/// ADCACHE_CAPACITY_BYTES, ADCACHE_TTL_US and ADCACHE_MINING_INTERVAL_US
/// override the corresponding fields when set.
void apply_env_overrides(EngineConfig& config);

/// "ttl_only", "lru" or "lfu"; throws ConfigError otherwise.
EvictionPolicy eviction_policy_from_string(const std::string& name);

/// Orchestrates the reactive path (serve from cache or invoke-and-record)
/// and the proactive path (mining cycles that publish a fresh DecisionModel
/// atomically). Caching errors never break the wrapped application: any
/// internal cache failure degrades to a plain invocation.
class Engine {
public:
    Engine(EngineConfig config, std::shared_ptr<Clock> clock);

    /// Serve from cache when the current model (or an AlwaysCache hint) says
    /// the method is cacheable; otherwise invoke and keep recording.
    /// Thunk errors propagate unchanged.
    Value handle_call(const MethodId& method, const std::vector<Value>& params,
                      const std::optional<std::string>& session,
                      const std::function<Value()>& thunk);

    /// Drain + persist traces, aggregate the sliding window, build and
    /// publish the next model. Before the warmup window has elapsed the
    /// published model is all-Undefined (hints still apply). Cycles never
    /// overlap; concurrent callers serialize.
    std::shared_ptr<const DecisionModel> run_mining_cycle(std::uint64_t now_us);

    /// Run a cycle iff mining is enabled and mining_interval has elapsed
    /// since the last one. Returns the new model, or nullptr if none ran.
    std::shared_ptr<const DecisionModel> maybe_run_mining_cycle(std::uint64_t now_us);

    /// Current model; readers always see a complete, immutable model.
    std::shared_ptr<const DecisionModel> model() const;

    void set_hints(const std::vector<TrackingHint>& hints);

    /// Manual toggle for the proactive path (monitoring stays on).
    void set_mining_enabled(bool enabled);

    CacheStore& cache() { return cache_; }
    Recorder& recorder() { return recorder_; }
    Clock& clock() { return *clock_; }
    const EngineConfig& config() const { return config_; }
    std::uint64_t started_at_us() const { return started_at_us_; }

private:
    void publish(std::shared_ptr<const DecisionModel> model);
    std::shared_ptr<const DecisionModel> build_warmup_model(std::uint64_t now_us);
    Value invoke_record_admit(const MethodId& method, const std::vector<CanonicalValue>& cparams,
                              const std::optional<std::string>& session,
                              const std::function<Value()>& thunk, bool force_record);

    EngineConfig config_;
    std::shared_ptr<Clock> clock_;
    Recorder recorder_;
    CacheStore cache_;
    std::uint64_t started_at_us_;

    mutable std::mutex model_mu_;
    std::shared_ptr<const DecisionModel> model_;

    std::mutex mining_mu_; // single-flight mining
    std::deque<CallRecord> window_;
    bool mining_enabled_ = true;
    std::optional<std::uint64_t> last_cycle_us_;
};

} // namespace adcache
