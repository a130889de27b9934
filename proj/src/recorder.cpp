#include "adcache/recorder.hpp"

#include "adcache/errors.hpp"

namespace adcache {

Recorder::Recorder(RecorderConfig config, std::shared_ptr<Clock> clock, std::uint64_t seed)
    : config_(std::move(config)), clock_(std::move(clock)), rng_(seed),
      hints_(std::make_shared<std::map<MethodId, HintMode>>()) {
    if (config_.buffer_capacity == 0) throw Error("buffer_capacity must be at least 1");
    if (!(config_.sampling_rate > 0.0 && config_.sampling_rate <= 1.0))
        throw Error("sampling_rate must be in (0,1]");
}

bool Recorder::sampling_pass(double scale) {
    const double p = config_.sampling_rate * scale;
    if (p >= 1.0) return true;
    if (p <= 0.0) return false;
    std::lock_guard<std::mutex> lock(rng_mu_);
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return u < p;
}

void Recorder::note_unsupported(const MethodId& method) {
    std::lock_guard<std::mutex> lock(buffer_mu_);
    if (downgraded_methods_.insert(method.signature).second)
        counters_.unsupported_downgrades += 1;
}

Value Recorder::invoke_tracked(const MethodId& method, const std::vector<Value>& params,
                               const std::optional<std::string>& session,
                               const std::function<Value()>& thunk, double sampling_scale) {
    const auto hint = hint_for(method);
    if (hint == HintMode::NeverTrack) return thunk();

    const std::uint64_t t0 = clock_->now_us();
    Value out = thunk(); // errors propagate, buffer untouched
    const std::uint64_t t1 = clock_->now_us();

    CallRecord rec;
    rec.method = method;
    try {
        rec.params.reserve(params.size());
        for (const Value& p : params) rec.params.push_back(canonicalize(p));
        rec.result = canonicalize(out);
    } catch (const UnsupportedValueError&) {
        note_unsupported(method);
        return out;
    }
    rec.cost_us = t1 - t0;
    rec.session = session;
    rec.at_us = t1;
    record(std::move(rec), sampling_scale, hint == HintMode::AlwaysTrack);
    return out;
}

void Recorder::record(CallRecord rec, double sampling_scale, bool force) {
    if (!force && !sampling_pass(sampling_scale)) return;
    std::lock_guard<std::mutex> lock(buffer_mu_);
    if (buffer_.size() >= config_.buffer_capacity) {
        counters_.dropped += 1; // drop the newest; never block the caller
        return;
    }
    buffer_.push_back(std::move(rec));
    counters_.enqueued += 1;
}

std::vector<CallRecord> Recorder::drain() {
    std::lock_guard<std::mutex> lock(buffer_mu_);
    std::vector<CallRecord> out(buffer_.begin(), buffer_.end());
    buffer_.clear();
    return out;
}

void Recorder::set_hints(const std::vector<TrackingHint>& hints) {
    auto next = std::make_shared<std::map<MethodId, HintMode>>();
    for (const TrackingHint& h : hints) {
        if (!next->emplace(h.method, h.mode).second)
            throw DuplicateHintError("duplicate hint for " + h.method.signature);
    }
    std::lock_guard<std::mutex> lock(hints_mu_);
    hints_ = std::move(next);
}

std::optional<HintMode> Recorder::hint_for(const MethodId& method) const {
    auto snapshot = hints();
    auto it = snapshot->find(method);
    if (it == snapshot->end()) return std::nullopt;
    return it->second;
}

std::shared_ptr<const std::map<MethodId, HintMode>> Recorder::hints() const {
    std::lock_guard<std::mutex> lock(hints_mu_);
    return hints_;
}

Recorder::Counters Recorder::counters() const {
    std::lock_guard<std::mutex> lock(buffer_mu_);
    return counters_;
}

} // namespace adcache
