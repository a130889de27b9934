#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adcache/value.hpp"

namespace adcache {

/// Identifies a tracked method: fully qualified name plus parameter arity,
/// e.g. "catalog.categories/1". Equality is byte equality of the signature.
struct MethodId {
    std::string signature;

    friend bool operator==(const MethodId& a, const MethodId& b) {
        return a.signature == b.signature;
    }
    friend bool operator!=(const MethodId& a, const MethodId& b) { return !(a == b); }
    friend bool operator<(const MethodId& a, const MethodId& b) {
        return a.signature < b.signature;
    }
};

/// One observed invocation: method, canonical parameters and result, cost in
/// microseconds, optional session token (absent = anonymous) and a monotonic
/// timestamp. Immutable after construction; safe to share across threads.
struct CallRecord {
    MethodId method;
    std::vector<CanonicalValue> params;
    CanonicalValue result;
    std::uint64_t cost_us = 0;
    std::optional<std::string> session;
    std::uint64_t at_us = 0;

    friend bool operator==(const CallRecord& a, const CallRecord& b) {
        return a.method == b.method && a.params == b.params && a.result == b.result &&
               a.cost_us == b.cost_us && a.session == b.session && a.at_us == b.at_us;
    }
};

/// Cache key: method plus a 128-bit digest of the parameter reprs. Stable
/// across process restarts.
struct CallKey {
    MethodId method;
    std::array<std::uint8_t, 16> params_digest{};

    std::string digest_hex() const;

    friend bool operator==(const CallKey& a, const CallKey& b) {
        return a.params_digest == b.params_digest && a.method == b.method;
    }
    friend bool operator!=(const CallKey& a, const CallKey& b) { return !(a == b); }
};

struct CallKeyHash {
    std::size_t operator()(const CallKey& k) const {
        std::size_t h = 0;
        for (std::size_t i = 0; i < sizeof(std::size_t); ++i)
            h = (h << 8) | k.params_digest[i];
        return h;
    }
};

/// Digest of (signature, param reprs); a pure function of its inputs.
CallKey call_key(const MethodId& method, std::span<const CanonicalValue> params);

/// The canonical key for a whole parameter list: the repr a sequence of these
/// parameters would have. Used by the miner for exact P-set semantics.
std::string param_list_key(std::span<const CanonicalValue> params);

/// One JSON line in the trace-log format: fields method, params (array of
/// repr strings), result, cost_us, session (omitted when anonymous), at_us.
std::string serialize_record(const CallRecord& record);

/// Inverse of serialize_record. Throws MalformedRecordError.
CallRecord parse_record(std::string_view line);

} // namespace adcache
