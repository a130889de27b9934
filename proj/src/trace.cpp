#include "adcache/trace.hpp"

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "adcache/errors.hpp"

namespace adcache {

using nlohmann::json;

std::string CallKey::digest_hex() const {
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(32);
    for (std::uint8_t b : params_digest) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0xf]);
    }
    return out;
}

CallKey call_key(const MethodId& method, std::span<const CanonicalValue> params) {
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw Error("EVP_MD_CTX_new failed");
    std::array<std::uint8_t, 32> full{};
    unsigned int len = 0;
    // Length-prefix every piece so (signature, reprs) -> bytes is injective.
    auto feed = [&](std::string_view s) {
        std::uint64_t n = s.size();
        std::uint8_t prefix[8];
        for (int i = 0; i < 8; ++i) prefix[i] = static_cast<std::uint8_t>(n >> (8 * i));
        EVP_DigestUpdate(ctx, prefix, sizeof prefix);
        EVP_DigestUpdate(ctx, s.data(), s.size());
    };
    if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("EVP_DigestInit_ex failed");
    }
    feed(method.signature);
    for (const auto& p : params) feed(p.repr);
    EVP_DigestFinal_ex(ctx, full.data(), &len);
    EVP_MD_CTX_free(ctx);

    CallKey key;
    key.method = method;
    std::copy(full.begin(), full.begin() + 16, key.params_digest.begin());
    return key;
}

std::string param_list_key(std::span<const CanonicalValue> params) {
    std::string out = "l:[";
    bool first = true;
    for (const auto& p : params) {
        if (!first) out.push_back(',');
        first = false;
        out += p.repr;
    }
    out.push_back(']');
    return out;
}

std::string serialize_record(const CallRecord& record) {
    json j;
    j["method"] = record.method.signature;
    json params = json::array();
    for (const auto& p : record.params) params.push_back(p.repr);
    j["params"] = std::move(params);
    j["result"] = record.result.repr;
    j["cost_us"] = record.cost_us;
    if (record.session) j["session"] = *record.session;
    j["at_us"] = record.at_us;
    return j.dump();
}

CallRecord parse_record(std::string_view line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw MalformedRecordError("trace line is not a JSON object");
    try {
        CallRecord rec;
        rec.method.signature = j.at("method").get<std::string>();
        if (rec.method.signature.empty()) throw MalformedRecordError("empty method signature");
        if (!j.at("params").is_array()) throw MalformedRecordError("params must be an array");
        for (const auto& p : j.at("params")) {
            const auto repr = p.get<std::string>();
            rec.params.push_back(CanonicalValue{repr, repr.size()});
        }
        const auto result_repr = j.at("result").get<std::string>();
        rec.result = CanonicalValue{result_repr, result_repr.size()};
        rec.cost_us = j.at("cost_us").get<std::uint64_t>();
        if (j.contains("session")) rec.session = j["session"].get<std::string>();
        rec.at_us = j.at("at_us").get<std::uint64_t>();
        return rec;
    } catch (const json::exception& e) {
        throw MalformedRecordError(std::string("trace line: ") + e.what());
    }
}

} // namespace adcache
