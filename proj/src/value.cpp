#include "adcache/value.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace adcache {

struct Value::Node {
    struct RecordData {
        std::string name;
        std::map<std::string, Value> fields;
    };
    struct OpaqueData {
        std::string description;
    };

    std::variant<std::monostate, bool, std::int64_t, double, std::string,
                 std::vector<Value>, std::map<std::string, Value>, RecordData, OpaqueData>
        data;
};

namespace {

constexpr const char kEscapable[] = "\\,=[]{}";

bool needs_escape(char c) {
    for (const char* p = kEscapable; *p; ++p)
        if (*p == c) return true;
    return false;
}

void append_escaped(std::string& out, std::string_view s) {
    for (char c : s) {
        if (needs_escape(c)) out.push_back('\\');
        out.push_back(c);
    }
}

void append_real(std::string& out, double d) {
    if (std::isnan(d)) {
        out += "nan";
        return;
    }
    if (std::isinf(d)) {
        out += d < 0 ? "-inf" : "inf";
        return;
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, d);
    out.append(buf, res.ptr);
}

} // namespace

Value Value::null() {
    static const auto node = std::make_shared<Node>();
    return Value(node);
}

Value Value::boolean(bool b) {
    auto node = std::make_shared<Node>();
    node->data = b;
    return Value(std::move(node));
}

Value Value::integer(std::int64_t i) {
    auto node = std::make_shared<Node>();
    node->data = i;
    return Value(std::move(node));
}

Value Value::real(double d) {
    auto node = std::make_shared<Node>();
    node->data = d;
    return Value(std::move(node));
}

Value Value::text(std::string s) {
    auto node = std::make_shared<Node>();
    node->data = std::move(s);
    return Value(std::move(node));
}

Value Value::sequence(std::vector<Value> elements) {
    auto node = std::make_shared<Node>();
    node->data = std::move(elements);
    return Value(std::move(node));
}

Value Value::map(std::vector<std::pair<std::string, Value>> entries) {
    auto node = std::make_shared<Node>();
    std::map<std::string, Value> m;
    for (auto& [k, v] : entries) m.insert_or_assign(std::move(k), std::move(v));
    node->data = std::move(m);
    return Value(std::move(node));
}

Value Value::record(std::string type_name, std::vector<std::pair<std::string, Value>> fields) {
    auto node = std::make_shared<Node>();
    Node::RecordData rec;
    rec.name = std::move(type_name);
    for (auto& [k, v] : fields) rec.fields.insert_or_assign(std::move(k), std::move(v));
    node->data = std::move(rec);
    return Value(std::move(node));
}

Value Value::opaque(std::string description) {
    auto node = std::make_shared<Node>();
    node->data = Node::OpaqueData{std::move(description)};
    return Value(std::move(node));
}

Value::Kind Value::kind() const {
    return static_cast<Kind>(node_->data.index());
}

bool Value::as_bool() const { return std::get<bool>(node_->data); }
std::int64_t Value::as_int() const { return std::get<std::int64_t>(node_->data); }
double Value::as_real() const { return std::get<double>(node_->data); }
const std::string& Value::as_text() const { return std::get<std::string>(node_->data); }
const std::vector<Value>& Value::elements() const {
    return std::get<std::vector<Value>>(node_->data);
}
const std::map<std::string, Value>& Value::entries() const {
    return std::get<std::map<std::string, Value>>(node_->data);
}
const std::string& Value::record_name() const {
    return std::get<Node::RecordData>(node_->data).name;
}
const std::map<std::string, Value>& Value::fields() const {
    return std::get<Node::RecordData>(node_->data).fields;
}
const std::string& Value::opaque_description() const {
    return std::get<Node::OpaqueData>(node_->data).description;
}

void Value::push_back(Value element) {
    if (kind() != Kind::Sequence) throw Error("push_back on non-sequence value");
    std::get<std::vector<Value>>(node_->data).push_back(std::move(element));
}

void Value::set(const std::string& key, Value value) {
    if (kind() == Kind::Map) {
        std::get<std::map<std::string, Value>>(node_->data).insert_or_assign(key, std::move(value));
    } else if (kind() == Kind::Record) {
        std::get<Node::RecordData>(node_->data).fields.insert_or_assign(key, std::move(value));
    } else {
        throw Error("set on non-map, non-record value");
    }
}

bool Value::same_node(const Value& other) const { return node_ == other.node_; }

bool operator==(const Value& a, const Value& b) {
    if (a.node_ == b.node_) return true;
    if (a.kind() == Value::Kind::Opaque || b.kind() == Value::Kind::Opaque) return false;
    return canonicalize(a).repr == canonicalize(b).repr;
}

// The writer needs node identity to detect cycles; route through a friend.
struct CanonicalizeAccess {
    static const std::shared_ptr<Value::Node>& node(const Value& v) { return v.node_; }
};

namespace {

void write_repr(std::string& out, const Value& v, std::vector<const void*>& path);

void write_children_map(std::string& out, const std::map<std::string, Value>& m,
                        std::vector<const void*>& path) {
    bool first = true;
    for (const auto& [k, child] : m) {
        if (!first) out.push_back(',');
        first = false;
        append_escaped(out, k);
        out.push_back('=');
        write_repr(out, child, path);
    }
}

void write_repr(std::string& out, const Value& v, std::vector<const void*>& path) {
    const auto& node = CanonicalizeAccess::node(v);
    switch (v.kind()) {
    case Value::Kind::Null:
        out.push_back('n');
        return;
    case Value::Kind::Bool:
        out += v.as_bool() ? "b:1" : "b:0";
        return;
    case Value::Kind::Int: {
        out += "i:";
        out += std::to_string(v.as_int());
        return;
    }
    case Value::Kind::Real:
        out += "f:";
        append_real(out, v.as_real());
        return;
    case Value::Kind::Text:
        out += "s:";
        append_escaped(out, v.as_text());
        return;
    case Value::Kind::Opaque:
        throw UnsupportedValueError("cannot canonicalize opaque value: " +
                                    v.opaque_description());
    default:
        break;
    }

    // Composite: cycles become a back-reference to the ancestor's path index.
    const void* id = node.get();
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (path[i] == id) {
            out += "@:";
            out += std::to_string(i);
            return;
        }
    }
    path.push_back(id);
    switch (v.kind()) {
    case Value::Kind::Sequence: {
        out += "l:[";
        bool first = true;
        for (const Value& child : v.elements()) {
            if (!first) out.push_back(',');
            first = false;
            write_repr(out, child, path);
        }
        out.push_back(']');
        break;
    }
    case Value::Kind::Map:
        out += "m:{";
        write_children_map(out, v.entries(), path);
        out.push_back('}');
        break;
    case Value::Kind::Record:
        out += "r:";
        append_escaped(out, v.record_name());
        out.push_back('{');
        write_children_map(out, v.fields(), path);
        out.push_back('}');
        break;
    default:
        break;
    }
    path.pop_back();
}

} // namespace

CanonicalValue canonicalize(const Value& value) {
    CanonicalValue cv;
    std::vector<const void*> path;
    write_repr(cv.repr, value, path);
    cv.size_estimate = cv.repr.size();
    return cv;
}

// ---------------------------------------------------------------------------
// Repr parsing
// ---------------------------------------------------------------------------

class ReprParser {
public:
    explicit ReprParser(std::string_view input) : in_(input) {}

    Value parse() {
        Value v = parse_value();
        if (pos_ != in_.size()) fail("trailing bytes after value");
        return v;
    }

private:
    std::string_view in_;
    std::size_t pos_ = 0;
    std::vector<Value> path_;

    [[noreturn]] void fail(const std::string& why) const {
        throw ValueParseError("bad repr at offset " + std::to_string(pos_) + ": " + why);
    }

    char peek() const { return pos_ < in_.size() ? in_[pos_] : '\0'; }

    char take() {
        if (pos_ >= in_.size()) fail("unexpected end of input");
        return in_[pos_++];
    }

    void expect(char c) {
        if (take() != c) {
            --pos_;
            fail(std::string("expected '") + c + "'");
        }
    }

    bool is_terminator(char c) const {
        return c == ',' || c == ']' || c == '}' || c == '=' || c == '\0';
    }

    // Unescape until an unescaped terminator (not consumed).
    std::string take_escaped(char extra_stop = '\0') {
        std::string out;
        while (pos_ < in_.size()) {
            char c = in_[pos_];
            if (c == '\\') {
                if (pos_ + 1 >= in_.size()) fail("dangling escape");
                out.push_back(in_[pos_ + 1]);
                pos_ += 2;
                continue;
            }
            if (is_terminator(c) || c == extra_stop) break;
            if (c == '[' || c == '{') fail("unescaped open bracket in text");
            out.push_back(c);
            ++pos_;
        }
        return out;
    }

    std::uint64_t take_uint() {
        std::uint64_t v = 0;
        auto res = std::from_chars(in_.data() + pos_, in_.data() + in_.size(), v);
        if (res.ec != std::errc{} || res.ptr == in_.data() + pos_) fail("expected integer");
        pos_ = static_cast<std::size_t>(res.ptr - in_.data());
        return v;
    }

    Value parse_value() {
        char tag = take();
        switch (tag) {
        case 'n':
            return Value::null();
        case 'b': {
            expect(':');
            char c = take();
            if (c == '1') return Value::boolean(true);
            if (c == '0') return Value::boolean(false);
            fail("bool payload must be 0 or 1");
        }
        case 'i': {
            expect(':');
            std::int64_t v = 0;
            auto res = std::from_chars(in_.data() + pos_, in_.data() + in_.size(), v);
            if (res.ec != std::errc{} || res.ptr == in_.data() + pos_) fail("bad int payload");
            pos_ = static_cast<std::size_t>(res.ptr - in_.data());
            return Value::integer(v);
        }
        case 'f': {
            expect(':');
            std::size_t start = pos_;
            while (pos_ < in_.size() && !is_terminator(in_[pos_])) ++pos_;
            std::string_view body = in_.substr(start, pos_ - start);
            if (body == "nan") return Value::real(std::nan(""));
            if (body == "inf") return Value::real(HUGE_VAL);
            if (body == "-inf") return Value::real(-HUGE_VAL);
            double d = 0;
            auto res = std::from_chars(body.data(), body.data() + body.size(), d);
            if (res.ec != std::errc{} || res.ptr != body.data() + body.size())
                fail("bad real payload");
            return Value::real(d);
        }
        case 's': {
            expect(':');
            return Value::text(take_escaped());
        }
        case 'l': {
            expect(':');
            expect('[');
            Value seq = Value::sequence();
            path_.push_back(seq);
            if (peek() != ']') {
                while (true) {
                    seq.push_back(parse_value());
                    if (peek() == ',') {
                        ++pos_;
                        continue;
                    }
                    break;
                }
            }
            expect(']');
            path_.pop_back();
            return seq;
        }
        case 'm': {
            expect(':');
            expect('{');
            Value m = Value::map();
            path_.push_back(m);
            parse_pairs_into(m);
            expect('}');
            path_.pop_back();
            return m;
        }
        case 'r': {
            expect(':');
            std::string name = take_escaped('{');
            expect('{');
            Value rec = Value::record(std::move(name));
            path_.push_back(rec);
            parse_pairs_into(rec);
            expect('}');
            path_.pop_back();
            return rec;
        }
        case '@': {
            expect(':');
            std::uint64_t k = take_uint();
            if (k >= path_.size()) fail("back-reference outside current path");
            return path_[static_cast<std::size_t>(k)];
        }
        default:
            --pos_;
            fail("unknown tag");
        }
    }

    void parse_pairs_into(Value& target) {
        if (peek() == '}') return;
        while (true) {
            std::string key = take_escaped();
            expect('=');
            target.set(key, parse_value());
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            break;
        }
    }
};

Value value_from_repr(std::string_view repr) { return ReprParser(repr).parse(); }

} // namespace adcache
