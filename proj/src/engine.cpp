#include "adcache/engine.hpp"

#include <cmath>
#include <fstream>

#include "adcache/errors.hpp"

namespace adcache {

Engine::Engine(EngineConfig config, std::shared_ptr<Clock> clock)
    : config_(config), clock_(clock),
      recorder_(config.recorder, clock, config.seed), cache_(config.cache),
      started_at_us_(clock_->now_us()) {
    if (config_.mining_interval_us == 0) throw Error("mining_interval must be positive");
    publish(build_warmup_model(started_at_us_));
}

void Engine::publish(std::shared_ptr<const DecisionModel> model) {
    std::lock_guard<std::mutex> lock(model_mu_);
    model_ = std::move(model);
}

std::shared_ptr<const DecisionModel> Engine::model() const {
    std::lock_guard<std::mutex> lock(model_mu_);
    return model_;
}

void Engine::set_hints(const std::vector<TrackingHint>& hints) {
    recorder_.set_hints(hints);
    std::lock_guard<std::mutex> lock(mining_mu_);
    if (!last_cycle_us_) publish(build_warmup_model(clock_->now_us()));
}

void Engine::set_mining_enabled(bool enabled) {
    std::lock_guard<std::mutex> lock(mining_mu_);
    mining_enabled_ = enabled;
}

Value Engine::handle_call(const MethodId& method, const std::vector<Value>& params,
                          const std::optional<std::string>& session,
                          const std::function<Value()>& thunk) {
    const auto hint = recorder_.hint_for(method);
    if (hint == HintMode::NeverTrack) return thunk();

    Decision decision = model()->decision_for(method);
    if (hint == HintMode::AlwaysCache) decision = Decision::Cacheable;
    if (hint == HintMode::NeverCache) decision = Decision::NotCacheable;

    if (decision == Decision::Cacheable) {
        std::vector<CanonicalValue> cparams;
        bool supported = true;
        try {
            cparams.reserve(params.size());
            for (const Value& p : params) cparams.push_back(canonicalize(p));
        } catch (const UnsupportedValueError&) {
            supported = false;
        }
        if (supported) {
            try {
                const CallKey key = call_key(method, cparams);
                if (auto hit = cache_.get(key, clock_->now_us()))
                    return value_from_repr(hit->repr);
            } catch (...) {
                // Cache-layer failure must never break the call; fall through.
            }
            return invoke_record_admit(method, cparams, session, thunk,
                                       hint == HintMode::AlwaysTrack);
        }
        return recorder_.invoke_tracked(method, params, session, thunk);
    }

    if (decision == Decision::NotCacheable)
        return recorder_.invoke_tracked(method, params, session, thunk,
                                        config_.recheck_sampling_rate);

    return recorder_.invoke_tracked(method, params, session, thunk);
}

Value Engine::invoke_record_admit(const MethodId& method,
                                  const std::vector<CanonicalValue>& cparams,
                                  const std::optional<std::string>& session,
                                  const std::function<Value()>& thunk, bool force_record) {
    const std::uint64_t t0 = clock_->now_us();
    Value out = thunk();
    const std::uint64_t t1 = clock_->now_us();

    CanonicalValue cresult;
    try {
        cresult = canonicalize(out);
    } catch (const UnsupportedValueError&) {
        return out; // downgrade: result cannot be stored or traced
    }

    CallRecord rec;
    rec.method = method;
    rec.params = cparams;
    rec.result = cresult;
    rec.cost_us = t1 - t0;
    rec.session = session;
    rec.at_us = t1;
    recorder_.record(std::move(rec), 1.0, force_record);

    try {
        cache_.admit(call_key(method, cparams), cresult, t1);
    } catch (...) {
        // OversizedItem or any internal failure: serve uncached.
    }
    return out;
}

std::shared_ptr<const DecisionModel> Engine::build_warmup_model(std::uint64_t now_us) {
    auto model = std::make_shared<DecisionModel>();
    model->built_at_us = now_us;
    model->required_samples =
        required_sample_size(config_.thresholds.confidence, config_.thresholds.margin);
    for (const auto& [method, mode] : *recorder_.hints()) {
        Verdict v;
        v.method = method;
        if (mode == HintMode::AlwaysCache) {
            v.decision = Decision::Cacheable;
        } else if (mode == HintMode::NeverCache || mode == HintMode::NeverTrack) {
            v.decision = Decision::NotCacheable;
        } else {
            continue;
        }
        v.deciding_criterion = std::string("hint:") + to_string(mode);
        model->verdicts.emplace(method, std::move(v));
    }
    return model;
}

std::shared_ptr<const DecisionModel> Engine::run_mining_cycle(std::uint64_t now_us) {
    std::lock_guard<std::mutex> lock(mining_mu_);

    std::vector<CallRecord> drained = recorder_.drain();
    if (!config_.recorder.sink_path.empty() && !drained.empty()) {
        std::ofstream sink(config_.recorder.sink_path, std::ios::app);
        for (const CallRecord& r : drained) sink << serialize_record(r) << '\n';
    }
    for (CallRecord& r : drained) window_.push_back(std::move(r));

    const auto window_us = static_cast<std::uint64_t>(
        config_.window_intervals * static_cast<double>(config_.mining_interval_us));
    const std::uint64_t cutoff = now_us > window_us ? now_us - window_us : 0;
    while (!window_.empty() && window_.front().at_us < cutoff) window_.pop_front();

    std::shared_ptr<const DecisionModel> next;
    if (now_us - started_at_us_ < config_.warmup_window_us) {
        // Insufficient data: all-Undefined model, hints still honored.
        auto m = std::make_shared<DecisionModel>(*build_warmup_model(now_us));
        std::map<MethodId, MethodStats> stats;
        for (const CallRecord& r : window_) accumulate(stats, r);
        for (const auto& [method, s] : stats) {
            if (m->verdicts.count(method)) continue;
            Verdict v;
            v.method = method;
            v.decision = Decision::Undefined;
            v.call_count = s.call_count;
            v.deciding_criterion = "warmup:insufficient_data";
            m->verdicts.emplace(method, std::move(v));
        }
        next = std::move(m);
    } else {
        std::map<MethodId, MethodStats> stats;
        for (const CallRecord& r : window_) accumulate(stats, r);
        auto hints_snapshot = recorder_.hints();
        std::vector<TrackingHint> hints;
        hints.reserve(hints_snapshot->size());
        for (const auto& [method, mode] : *hints_snapshot) hints.push_back({method, mode});
        next = std::make_shared<DecisionModel>(
            build_model(stats, config_.thresholds, hints, now_us));
    }
    publish(next);
    last_cycle_us_ = now_us;
    return next;
}

std::shared_ptr<const DecisionModel> Engine::maybe_run_mining_cycle(std::uint64_t now_us) {
    {
        std::lock_guard<std::mutex> lock(mining_mu_);
        if (!mining_enabled_) return nullptr;
        if (last_cycle_us_ && now_us - *last_cycle_us_ < config_.mining_interval_us)
            return nullptr;
        if (!last_cycle_us_ && now_us - started_at_us_ < config_.mining_interval_us)
            return nullptr;
    }
    return run_mining_cycle(now_us);
}

} // namespace adcache
