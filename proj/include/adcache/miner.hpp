#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>

#include "adcache/hints.hpp"
#include "adcache/trace.hpp"

namespace adcache {

/// Per-method aggregates with exact set semantics: the set of distinct
/// parameter lists (P_Set), the set of distinct (params, result) pairs
/// (Pr_Set), session coverage per distinct parameter list, and running cost
/// moments in microseconds.
struct MethodStats {
    MethodId method;
    std::uint64_t call_count = 0;
    std::set<std::string> p_set;
    std::set<std::pair<std::string, std::string>> pr_set;
    /// param-list key -> distinct session tokens that requested it.
    std::map<std::string, std::set<std::string>> sessions_by_params;
    /// param-list key -> number of session-bearing calls (weights for the
    /// shareability mean). Anonymous calls are excluded here but still count
    /// in call_count.
    std::map<std::string, std::uint64_t> session_calls_by_params;
    std::set<std::string> sessions;
    double cost_sum_us = 0.0;
    double cost_sq_sum_us = 0.0;

    std::size_t p_set_size() const { return p_set.size(); }
    std::size_t pr_set_size() const { return pr_set.size(); }
    std::size_t total_sessions() const { return sessions.size(); }
    double cost_mean_us() const { return call_count ? cost_sum_us / double(call_count) : 0.0; }
    double cost_sq_mean_us() const {
        return call_count ? cost_sq_sum_us / double(call_count) : 0.0;
    }
};

/// Tuning knobs for the five criteria. Defaults follow the evaluation setup:
/// 99% confidence with 3% margin for the frequency sample size, k = 0 for
/// changeability and k = 1 for shareability and expensiveness.
struct CriteriaThresholds {
    double confidence = 0.99;
    double margin = 0.03;
    double k_changeability = 0.0;
    double k_shareability = 1.0;
    double k_expensiveness = 1.0;
};

enum class Decision { Cacheable, NotCacheable, Undefined };

const char* to_string(Decision decision);

/// Criterion values and the outcome of the decision chain for one method.
struct Verdict {
    MethodId method;
    Decision decision = Decision::Undefined;
    double staticity = 0.0;
    double changeability = 0.0;
    bool frequent = false;
    std::optional<double> shareability;
    double cost_mean_us = 0.0;
    std::uint64_t call_count = 0;
    std::string deciding_criterion;
};

/// Population mean and standard deviation (population form, divide by N) for
/// changeability, defined shareabilities and cost means, over exactly the
/// mined methods.
struct PopulationMoments {
    double mu_changeability = 0.0;
    double sigma_changeability = 0.0;
    std::size_t n_changeability = 0;
    double mu_shareability = 0.0;
    double sigma_shareability = 0.0;
    std::size_t n_shareability = 0;
    double mu_cost_us = 0.0;
    double sigma_cost_us = 0.0;
    std::size_t n_cost = 0;
};

/// Immutable mining output: one verdict per method plus the population
/// moments that justified them.
struct DecisionModel {
    std::map<MethodId, Verdict> verdicts;
    std::uint64_t built_at_us = 0;
    PopulationMoments population;
    std::uint64_t required_samples = 0;

    const Verdict* find(const MethodId& method) const {
        auto it = verdicts.find(method);
        return it == verdicts.end() ? nullptr : &it->second;
    }

    /// Methods never seen by the miner are Undefined.
    Decision decision_for(const MethodId& method) const {
        const Verdict* v = find(method);
        return v ? v->decision : Decision::Undefined;
    }
};

/// Fold one record into the per-method aggregates.
void accumulate(std::map<MethodId, MethodStats>& stats, const CallRecord& record);

/// Aggregate a batch of records (exact set semantics, no approximation).
std::map<MethodId, MethodStats> aggregate(std::span<const CallRecord> records);

/// |P_Set| / |Pr_Set|; 1 means every distinct parameter list always produced
/// the same result. Throws NoDataError when the method has no calls.
double staticity(const MethodStats& stats);

/// 1 - staticity.
double changeability(const MethodStats& stats);

/// Cochran sample size ceil(z^2 * 0.25 / margin^2) with z the two-sided
/// standard-normal quantile for the confidence level; a method is frequent
/// iff its call count reaches this value.
std::uint64_t required_sample_size(double confidence, double margin);

/// Call-count-weighted mean over distinct parameter lists of
/// |sessions calling (m, P)| / |sessions calling m|. Empty when every call
/// was anonymous.
std::optional<double> shareability(const MethodStats& stats);

/// Evaluate the decision chain for every method and apply hint overrides.
///
/// Chain: (1) below sample size -> Undefined; (2) completely static ->
/// Cacheable; (3) changeability strictly above mu + k*sigma -> NotCacheable;
/// (4) shareability defined and strictly above mu + k*sigma -> Cacheable;
/// (5) cost mean strictly above mu + k*sigma -> Cacheable; (6) otherwise
/// NotCacheable. Size criteria are deliberately left to cache admission.
/// AlwaysCache / NeverCache (and NeverTrack) hints override the chain and
/// are present in the output even for methods with no stats.
DecisionModel build_model(const std::map<MethodId, MethodStats>& stats,
                          const CriteriaThresholds& thresholds,
                          std::span<const TrackingHint> hints, std::uint64_t now_us);

} // namespace adcache
