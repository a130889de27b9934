#include "adcache/miner.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "adcache/errors.hpp"

namespace adcache {

const char* to_string(Decision decision) {
    switch (decision) {
    case Decision::Cacheable:
        return "cacheable";
    case Decision::NotCacheable:
        return "not_cacheable";
    case Decision::Undefined:
        return "undefined";
    }
    return "undefined";
}

const char* to_string(HintMode mode) {
    switch (mode) {
    case HintMode::AlwaysTrack:
        return "always_track";
    case HintMode::NeverTrack:
        return "never_track";
    case HintMode::NeverCache:
        return "never_cache";
    case HintMode::AlwaysCache:
        return "always_cache";
    }
    return "always_track";
}

void accumulate(std::map<MethodId, MethodStats>& stats, const CallRecord& record) {
    MethodStats& s = stats[record.method];
    if (s.call_count == 0) s.method = record.method;
    s.call_count += 1;
    std::string pkey = param_list_key(record.params);
    s.pr_set.emplace(pkey, record.result.repr);
    if (record.session) {
        s.sessions.insert(*record.session);
        s.sessions_by_params[pkey].insert(*record.session);
        s.session_calls_by_params[pkey] += 1;
    }
    s.p_set.insert(std::move(pkey));
    const double c = static_cast<double>(record.cost_us);
    s.cost_sum_us += c;
    s.cost_sq_sum_us += c * c;
}

std::map<MethodId, MethodStats> aggregate(std::span<const CallRecord> records) {
    std::map<MethodId, MethodStats> stats;
    for (const CallRecord& r : records) accumulate(stats, r);
    return stats;
}

double staticity(const MethodStats& stats) {
    if (stats.call_count == 0)
        throw NoDataError("staticity of method with no calls: " + stats.method.signature);
    return static_cast<double>(stats.p_set_size()) / static_cast<double>(stats.pr_set_size());
}

double changeability(const MethodStats& stats) { return 1.0 - staticity(stats); }

namespace {

// Inverse standard-normal CDF: Acklam's rational approximation refined with
// one Halley step against erfc, giving near machine precision.
double normal_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    double x;
    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

double population_mean(const std::vector<double>& xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    return xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
}

double population_sigma(const std::vector<double>& xs, double mu) {
    if (xs.empty()) return 0.0;
    double sum = 0.0;
    for (double x : xs) sum += (x - mu) * (x - mu);
    return std::sqrt(sum / static_cast<double>(xs.size()));
}

} // namespace

std::uint64_t required_sample_size(double confidence, double margin) {
    if (!(confidence > 0.0 && confidence < 1.0))
        throw Error("confidence must be in (0,1)");
    if (!(margin > 0.0 && margin <= 1.0)) throw Error("margin must be in (0,1]");
    const double z = normal_quantile(0.5 + confidence / 2.0);
    return static_cast<std::uint64_t>(std::ceil(z * z * 0.25 / (margin * margin)));
}

std::optional<double> shareability(const MethodStats& stats) {
    if (stats.total_sessions() == 0) return std::nullopt;
    const double total = static_cast<double>(stats.total_sessions());
    double weighted = 0.0;
    double weight_sum = 0.0;
    for (const auto& [pkey, calls] : stats.session_calls_by_params) {
        const double share =
            static_cast<double>(stats.sessions_by_params.at(pkey).size()) / total;
        weighted += share * static_cast<double>(calls);
        weight_sum += static_cast<double>(calls);
    }
    if (weight_sum == 0.0) return std::nullopt;
    return weighted / weight_sum;
}

DecisionModel build_model(const std::map<MethodId, MethodStats>& stats,
                          const CriteriaThresholds& thresholds,
                          std::span<const TrackingHint> hints, std::uint64_t now_us) {
    DecisionModel model;
    model.built_at_us = now_us;
    model.required_samples = required_sample_size(thresholds.confidence, thresholds.margin);

    std::vector<double> ch_values;
    std::vector<double> sh_values;
    std::vector<double> ct_values;
    for (const auto& [method, s] : stats) {
        if (s.call_count == 0) continue;
        ch_values.push_back(changeability(s));
        if (auto sh = shareability(s)) sh_values.push_back(*sh);
        ct_values.push_back(s.cost_mean_us());
    }
    PopulationMoments& pop = model.population;
    pop.mu_changeability = population_mean(ch_values);
    pop.sigma_changeability = population_sigma(ch_values, pop.mu_changeability);
    pop.n_changeability = ch_values.size();
    pop.mu_shareability = population_mean(sh_values);
    pop.sigma_shareability = population_sigma(sh_values, pop.mu_shareability);
    pop.n_shareability = sh_values.size();
    pop.mu_cost_us = population_mean(ct_values);
    pop.sigma_cost_us = population_sigma(ct_values, pop.mu_cost_us);
    pop.n_cost = ct_values.size();

    const double ch_limit =
        pop.mu_changeability + thresholds.k_changeability * pop.sigma_changeability;
    const double sh_limit =
        pop.mu_shareability + thresholds.k_shareability * pop.sigma_shareability;
    const double ct_limit = pop.mu_cost_us + thresholds.k_expensiveness * pop.sigma_cost_us;

    std::map<MethodId, HintMode> hint_map;
    for (const TrackingHint& h : hints) hint_map[h.method] = h.mode;

    for (const auto& [method, s] : stats) {
        if (s.call_count == 0) continue;
        Verdict v;
        v.method = method;
        v.call_count = s.call_count;
        v.staticity = staticity(s);
        v.changeability = 1.0 - v.staticity;
        v.shareability = shareability(s);
        v.cost_mean_us = s.cost_mean_us();
        v.frequent = s.call_count >= model.required_samples;
        if (!v.frequent) {
            v.decision = Decision::Undefined;
            v.deciding_criterion = "frequency:insufficient_sample";
        } else if (v.staticity == 1.0) {
            v.decision = Decision::Cacheable;
            v.deciding_criterion = "staticity:completely_static";
        } else if (v.changeability > ch_limit) {
            v.decision = Decision::NotCacheable;
            v.deciding_criterion = "changeability:above_tolerance";
        } else if (v.shareability && *v.shareability > sh_limit) {
            v.decision = Decision::Cacheable;
            v.deciding_criterion = "shareability:shared";
        } else if (v.cost_mean_us > ct_limit) {
            v.decision = Decision::Cacheable;
            v.deciding_criterion = "expensiveness:expensive";
        } else {
            v.decision = Decision::NotCacheable;
            v.deciding_criterion = "fallthrough:no_criterion_met";
        }
        model.verdicts.emplace(method, std::move(v));
    }

    // Hint overrides; AlwaysCache/NeverCache methods get a verdict even with
    // zero traces.
    for (const auto& [method, mode] : hint_map) {
        Decision forced;
        if (mode == HintMode::AlwaysCache) {
            forced = Decision::Cacheable;
        } else if (mode == HintMode::NeverCache || mode == HintMode::NeverTrack) {
            forced = Decision::NotCacheable;
        } else {
            continue;
        }
        auto it = model.verdicts.find(method);
        if (it == model.verdicts.end()) {
            Verdict v;
            v.method = method;
            v.decision = forced;
            v.deciding_criterion = std::string("hint:") + to_string(mode);
            model.verdicts.emplace(method, std::move(v));
        } else {
            it->second.decision = forced;
            it->second.deciding_criterion = std::string("hint:") + to_string(mode);
        }
    }

    return model;
}

} // namespace adcache
