#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "adcache/trace.hpp"

namespace adcache {

enum class EvictionPolicy { TtlOnly, Lru, Lfu };

/// capacity and TTL are domain-specific and unrelated to the identification
/// of cacheable content; they must be chosen by the integrator.
struct CacheConfig {
    std::uint64_t capacity_bytes = 1 << 20;
    std::uint64_t ttl_us = 60'000'000;
    EvictionPolicy policy = EvictionPolicy::TtlOnly;
};

struct CacheStatsSnapshot {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t admissions = 0;
    std::uint64_t rejections_size = 0;
    std::uint64_t expirations = 0;
    std::uint64_t evictions = 0;
    std::uint64_t used_bytes = 0;
    std::uint64_t live_entries = 0;

    double hit_ratio() const {
        const std::uint64_t total = hits + misses;
        return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
    }

    std::string to_json() const;
};

enum class AdmitStatus { Admitted, RejectedSize };

struct AdmitResult {
    AdmitStatus status = AdmitStatus::Admitted;
    std::vector<CallKey> evicted;
};

/// Bounded in-memory result store. Entries expire a fixed TTL after
/// insertion (reads do not refresh). Admission requires the entry size to be
/// strictly below the free space; under TtlOnly nothing is ever evicted to
/// make room, while LRU/LFU evict until the rule holds. All operations are
/// safe for concurrent callers and the counters are exact.
class CacheStore {
public:
    explicit CacheStore(CacheConfig config);

    /// Value if present and younger than the TTL; expired entries are
    /// removed on access. Counts a hit or a miss.
    std::optional<CanonicalValue> get(const CallKey& key, std::uint64_t now_us);

    /// Try to insert a computed result. Expired entries are purged first.
    /// Admitting a key that is somehow still live replaces the entry in
    /// place. Sizes of zero are accounted as one byte. Throws
    /// OversizedItemError when the result can never fit.
    AdmitResult admit(const CallKey& key, const CanonicalValue& result, std::uint64_t now_us);

    /// Drop every entry at or past its TTL; returns how many were removed.
    std::size_t sweep(std::uint64_t now_us);

    CacheStatsSnapshot stats() const;

    const CacheConfig& config() const { return config_; }

private:
    struct Entry {
        CanonicalValue result;
        std::uint64_t size = 0;
        std::uint64_t inserted_at = 0;
        std::uint64_t last_access = 0;
        std::uint64_t access_count = 0;
        std::uint64_t access_seq = 0; // unique, monotone; breaks all ties
    };

    bool expired(const Entry& e, std::uint64_t now_us) const {
        return now_us - e.inserted_at >= config_.ttl_us && now_us >= e.inserted_at;
    }

    // Callers hold mu_.
    std::size_t purge_expired_locked(std::uint64_t now_us);
    void erase_locked(std::unordered_map<CallKey, Entry, CallKeyHash>::iterator it);
    CallKey pick_victim_locked() const;

    CacheConfig config_;
    mutable std::mutex mu_;
    std::unordered_map<CallKey, Entry, CallKeyHash> entries_;
    std::uint64_t used_bytes_ = 0;
    std::uint64_t seq_ = 0;
    CacheStatsSnapshot counters_;
};

} // namespace adcache
