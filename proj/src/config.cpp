#include <cstdlib>
#include <fstream>
#include <sstream>

#include "adcache/engine.hpp"
#include "adcache/errors.hpp"

namespace adcache {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::string unquote(std::string v) {
    if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                          (v.front() == '\'' && v.back() == '\'')))
        return v.substr(1, v.size() - 2);
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const auto out = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    }
}

double parse_f64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

EvictionPolicy parse_policy(const std::string& v) {
    if (v == "ttl_only") return EvictionPolicy::TtlOnly;
    if (v == "lru") return EvictionPolicy::Lru;
    if (v == "lfu") return EvictionPolicy::Lfu;
    throw ConfigError("cache.policy: expected ttl_only, lru or lfu, got '" + v + "'");
}

} // namespace

EvictionPolicy eviction_policy_from_string(const std::string& name) {
    return parse_policy(name);
}

EngineConfig parse_engine_config(const std::string& text) {
    EngineConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = section + "." + trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));

        if (key == "recorder.buffer_capacity") {
            cfg.recorder.buffer_capacity = static_cast<std::size_t>(parse_u64(key, value));
        } else if (key == "recorder.sampling_rate") {
            cfg.recorder.sampling_rate = parse_f64(key, value);
        } else if (key == "recorder.sink") {
            cfg.recorder.sink_path = value;
        } else if (key == "cache.capacity_bytes") {
            cfg.cache.capacity_bytes = parse_u64(key, value);
        } else if (key == "cache.ttl_us") {
            cfg.cache.ttl_us = parse_u64(key, value);
        } else if (key == "cache.policy") {
            cfg.cache.policy = parse_policy(value);
        } else if (key == "thresholds.confidence") {
            cfg.thresholds.confidence = parse_f64(key, value);
        } else if (key == "thresholds.margin") {
            cfg.thresholds.margin = parse_f64(key, value);
        } else if (key == "thresholds.k_changeability") {
            cfg.thresholds.k_changeability = parse_f64(key, value);
        } else if (key == "thresholds.k_shareability") {
            cfg.thresholds.k_shareability = parse_f64(key, value);
        } else if (key == "thresholds.k_expensiveness") {
            cfg.thresholds.k_expensiveness = parse_f64(key, value);
        } else if (key == "engine.mining_interval_us") {
            cfg.mining_interval_us = parse_u64(key, value);
        } else if (key == "engine.warmup_window_us") {
            cfg.warmup_window_us = parse_u64(key, value);
        } else if (key == "engine.window_intervals") {
            cfg.window_intervals = parse_f64(key, value);
        } else if (key == "engine.recheck_sampling_rate") {
            cfg.recheck_sampling_rate = parse_f64(key, value);
        } else if (key == "engine.seed") {
            cfg.seed = parse_u64(key, value);
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    return cfg;
}

EngineConfig load_engine_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_engine_config(buf.str());
}

void apply_env_overrides(EngineConfig& config) {
    if (const char* v = std::getenv("ADCACHE_CAPACITY_BYTES"))
        config.cache.capacity_bytes = parse_u64("ADCACHE_CAPACITY_BYTES", v);
    if (const char* v = std::getenv("ADCACHE_TTL_US"))
        config.cache.ttl_us = parse_u64("ADCACHE_TTL_US", v);
    if (const char* v = std::getenv("ADCACHE_MINING_INTERVAL_US"))
        config.mining_interval_us = parse_u64("ADCACHE_MINING_INTERVAL_US", v);
}

} // namespace adcache
