#include "adcache/cache.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "adcache/errors.hpp"

namespace adcache {

std::string CacheStatsSnapshot::to_json() const {
    nlohmann::json j;
    j["hits"] = hits;
    j["misses"] = misses;
    j["hit_ratio"] = hit_ratio();
    j["admissions"] = admissions;
    j["rejections_size"] = rejections_size;
    j["expirations"] = expirations;
    j["evictions"] = evictions;
    j["used_bytes"] = used_bytes;
    j["live_entries"] = live_entries;
    return j.dump();
}

CacheStore::CacheStore(CacheConfig config) : config_(config) {
    if (config_.capacity_bytes == 0) throw Error("cache capacity must be positive");
    if (config_.ttl_us == 0) throw Error("cache ttl must be positive");
}

void CacheStore::erase_locked(std::unordered_map<CallKey, Entry, CallKeyHash>::iterator it) {
    used_bytes_ -= it->second.size;
    entries_.erase(it);
}

std::size_t CacheStore::purge_expired_locked(std::uint64_t now_us) {
    std::size_t removed = 0;
    for (auto it = entries_.begin(); it != entries_.end();) {
        if (expired(it->second, now_us)) {
            auto victim = it++;
            erase_locked(victim);
            ++removed;
        } else {
            ++it;
        }
    }
    counters_.expirations += removed;
    return removed;
}

CallKey CacheStore::pick_victim_locked() const {
    auto best = entries_.begin();
    for (auto it = std::next(entries_.begin()); it != entries_.end(); ++it) {
        const Entry& e = it->second;
        const Entry& b = best->second;
        if (config_.policy == EvictionPolicy::Lfu) {
            if (e.access_count < b.access_count ||
                (e.access_count == b.access_count && e.access_seq < b.access_seq))
                best = it;
        } else { // Lru; access_seq is unique so insertion order breaks ties
            if (e.access_seq < b.access_seq) best = it;
        }
    }
    return best->first;
}

std::optional<CanonicalValue> CacheStore::get(const CallKey& key, std::uint64_t now_us) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        counters_.misses += 1;
        return std::nullopt;
    }
    if (expired(it->second, now_us)) {
        erase_locked(it);
        counters_.expirations += 1;
        counters_.misses += 1;
        return std::nullopt;
    }
    Entry& e = it->second;
    e.access_count += 1;
    e.last_access = now_us;
    e.access_seq = ++seq_;
    counters_.hits += 1;
    return e.result;
}

AdmitResult CacheStore::admit(const CallKey& key, const CanonicalValue& result,
                              std::uint64_t now_us) {
    std::lock_guard<std::mutex> lock(mu_);
    const std::uint64_t size = std::max<std::uint64_t>(1, result.size_estimate);
    if (size >= config_.capacity_bytes)
        throw OversizedItemError("result of " + key.method.signature + " (" +
                                 std::to_string(size) + " bytes) can never fit in a " +
                                 std::to_string(config_.capacity_bytes) + " byte cache");

    purge_expired_locked(now_us);

    // A live key means a refresh: pull the old entry out so the admission
    // rule sees the space it frees, and restore it if the new size is
    // rejected. Refreshes are not new admissions.
    std::optional<Entry> previous;
    if (auto it = entries_.find(key); it != entries_.end()) {
        previous = std::move(it->second);
        erase_locked(it);
    }

    AdmitResult out;
    if (config_.policy == EvictionPolicy::TtlOnly) {
        if (size >= config_.capacity_bytes - used_bytes_) {
            if (previous) {
                used_bytes_ += previous->size;
                entries_.emplace(key, std::move(*previous));
            }
            counters_.rejections_size += 1;
            out.status = AdmitStatus::RejectedSize;
            return out;
        }
    } else {
        while (!entries_.empty() && size >= config_.capacity_bytes - used_bytes_) {
            auto victim = entries_.find(pick_victim_locked());
            out.evicted.push_back(victim->first);
            erase_locked(victim);
            counters_.evictions += 1;
        }
    }

    Entry e;
    e.result = result;
    e.size = size;
    e.inserted_at = now_us;
    e.last_access = now_us;
    e.access_count = 0;
    e.access_seq = ++seq_;
    used_bytes_ += size;
    entries_.emplace(key, std::move(e));
    if (!previous) counters_.admissions += 1;
    out.status = AdmitStatus::Admitted;
    return out;
}

std::size_t CacheStore::sweep(std::uint64_t now_us) {
    std::lock_guard<std::mutex> lock(mu_);
    return purge_expired_locked(now_us);
}

CacheStatsSnapshot CacheStore::stats() const {
    std::lock_guard<std::mutex> lock(mu_);
    CacheStatsSnapshot snap = counters_;
    snap.used_bytes = used_bytes_;
    snap.live_entries = entries_.size();
    return snap;
}

} // namespace adcache
