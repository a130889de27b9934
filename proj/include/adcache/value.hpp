#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "adcache/errors.hpp"

namespace adcache {

/// Declared storage estimate plus the deterministic structural serialization
/// of a value. Two structurally equal values have byte-identical reprs no
/// matter where or how they were built.
struct CanonicalValue {
    std::string repr;
    std::uint64_t size_estimate = 0;

    friend bool operator==(const CanonicalValue& a, const CanonicalValue& b) {
        return a.repr == b.repr;
    }
    friend bool operator!=(const CanonicalValue& a, const CanonicalValue& b) {
        return !(a == b);
    }
    friend bool operator<(const CanonicalValue& a, const CanonicalValue& b) {
        return a.repr < b.repr;
    }
};

/// A value in the closed universe the tracker understands: null, booleans,
/// 64-bit integers, doubles, text, sequences, string-keyed maps, and named
/// records. Values are handles to shared nodes; copying a Value shares
/// structure, and composites may be mutated in place (which is how cyclic
/// structures can arise). Opaque values represent foreign objects that are
/// outside the universe and cannot be canonicalized.
class Value {
public:
    enum class Kind { Null, Bool, Int, Real, Text, Sequence, Map, Record, Opaque };

    Value() : Value(null()) {}

    static Value null();
    static Value boolean(bool b);
    static Value integer(std::int64_t i);
    static Value real(double d);
    static Value text(std::string s);
    static Value sequence(std::vector<Value> elements = {});
    static Value map(std::vector<std::pair<std::string, Value>> entries = {});
    static Value record(std::string type_name,
                        std::vector<std::pair<std::string, Value>> fields = {});
    static Value opaque(std::string description);

    Kind kind() const;

    bool as_bool() const;
    std::int64_t as_int() const;
    double as_real() const;
    const std::string& as_text() const;
    const std::vector<Value>& elements() const;
    const std::map<std::string, Value>& entries() const;
    const std::string& record_name() const;
    const std::map<std::string, Value>& fields() const;
    const std::string& opaque_description() const;

    /// Append to a Sequence (throws Error on other kinds).
    void push_back(Value element);
    /// Insert or replace a Map entry / Record field.
    void set(const std::string& key, Value value);

    /// Shared-node identity, not structural equality.
    bool same_node(const Value& other) const;

    /// Structural equality via canonical reprs; opaque values compare by
    /// node identity.
    friend bool operator==(const Value& a, const Value& b);
    friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

private:
    struct Node;
    explicit Value(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    std::shared_ptr<Node> node_;

    friend CanonicalValue canonicalize(const Value& value);
    friend struct CanonicalizeAccess;
};

/// Deterministic structural serialization.
///
/// Grammar of the repr (one tag character per kind):
///   null      n
///   bool      b:1 | b:0
///   int       i:<decimal>
///   real      f:<shortest round-trip decimal>   (also inf/-inf/nan)
///   text      s:<escaped bytes>
///   sequence  l:[<repr>,<repr>,...]
///   map       m:{<key>=<repr>,...}              keys sorted bytewise
///   record    r:<name>{<field>=<repr>,...}      fields sorted bytewise
///   backref   @:<k>   cycle edge to the k-th node on the path from the root
///
/// Keys, record names and text payloads escape \ , = [ ] { } with a
/// backslash, so reprs of distinct values never collide.
///
/// size_estimate defaults to the repr length in bytes; callers may overwrite
/// it with a better storage estimate before admitting to a cache.
///
/// Throws UnsupportedValueError if the value (or any reachable part of it)
/// is opaque.
CanonicalValue canonicalize(const Value& value);

/// Parse a repr back into a value. Back-references are reconstructed as real
/// shared/cyclic structure, so canonicalize(value_from_repr(r)).repr == r.
/// Throws ValueParseError on malformed input.
Value value_from_repr(std::string_view repr);

} // namespace adcache
