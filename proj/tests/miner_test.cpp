#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "adcache/errors.hpp"
#include "adcache/miner.hpp"
#include "support/gen.hpp"
#include "support/oracle.hpp"

using namespace adcache;

namespace {

CallRecord rec(const std::string& sig, std::vector<int> params, int result, int cost_us,
               std::optional<std::string> session = std::nullopt) {
    CallRecord r;
    r.method.signature = sig;
    for (int p : params) r.params.push_back(canonicalize(Value::integer(p)));
    r.result = canonicalize(Value::integer(result));
    r.cost_us = std::uint64_t(cost_us);
    r.session = std::move(session);
    static std::uint64_t at = 0;
    r.at_us = ++at;
    return r;
}

} // namespace

TEST_CASE("aggregate keeps exact distinct sets") {
    std::vector<CallRecord> records = {
        rec("m/1", {1}, 10, 5),
        rec("m/1", {1}, 10, 5),
        rec("m/1", {2}, 20, 5),
        rec("m/1", {2}, 21, 5),
    };
    auto stats = aggregate(records);
    REQUIRE(stats.count(MethodId{"m/1"}) == 1);
    const MethodStats& s = stats.at(MethodId{"m/1"});
    CHECK(s.call_count == 4);
    CHECK(s.p_set_size() == 2);
    CHECK(s.pr_set_size() == 3);
    CHECK(staticity(s) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    SUBCASE("no records, no entry") { CHECK(stats.count(MethodId{"other/0"}) == 0); }

    SUBCASE("a thousand identical calls collapse to singleton sets") {
        std::vector<CallRecord> repeats;
        for (int i = 0; i < 1000; ++i) repeats.push_back(rec("hot/1", {7}, 99, 3));
        auto st = aggregate(repeats);
        const MethodStats& h = st.at(MethodId{"hot/1"});
        CHECK(h.call_count == 1000);
        CHECK(h.p_set_size() == 1);
        CHECK(h.pr_set_size() == 1);
        CHECK(staticity(h) == 1.0);
    }
}

TEST_CASE("anonymous records count calls but not sessions") {
    std::vector<CallRecord> records = {
        rec("m/1", {1}, 10, 5, "u1"),
        rec("m/1", {1}, 10, 5),
        rec("m/1", {1}, 10, 5),
    };
    const MethodStats& s = aggregate(records).at(MethodId{"m/1"});
    CHECK(s.call_count == 3);
    CHECK(s.total_sessions() == 1);
    CHECK(s.session_calls_by_params.begin()->second == 1);
}

TEST_CASE("staticity and changeability") {
    std::vector<CallRecord> one_p_two_r = {rec("m/0", {}, 1, 5), rec("m/0", {}, 2, 5)};
    const MethodStats& s = aggregate(one_p_two_r).at(MethodId{"m/0"});
    CHECK(staticity(s) == 0.5);
    CHECK(changeability(s) == 0.5);
    CHECK(staticity(s) + changeability(s) == doctest::Approx(1.0).epsilon(1e-12));

    MethodStats empty;
    CHECK_THROWS_AS(staticity(empty), NoDataError);
    CHECK_THROWS_AS(changeability(empty), NoDataError);
}

TEST_CASE("staticity + changeability == 1 over random traces") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 50; ++i) {
        auto records = gen::random_records(rng, 400, 8);
        for (const auto& [m, s] : aggregate(records))
            CHECK(staticity(s) + changeability(s) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("staticity monotonicity under new records") {
    std::vector<CallRecord> base = {rec("m/1", {1}, 10, 5), rec("m/1", {2}, 20, 5),
                                    rec("m/1", {2}, 21, 5)};
    auto stats = aggregate(base);
    const double before = staticity(stats.at(MethodId{"m/1"}));

    SUBCASE("seen (P,r) never decreases staticity") {
        accumulate(stats, rec("m/1", {1}, 10, 5));
        CHECK(staticity(stats.at(MethodId{"m/1"})) >= before);
    }
    SUBCASE("new r for a seen P never increases staticity") {
        accumulate(stats, rec("m/1", {1}, 11, 5));
        CHECK(staticity(stats.at(MethodId{"m/1"})) <= before);
    }
}

TEST_CASE("required_sample_size matches the independent quantile oracle") {
    CHECK(required_sample_size(0.99, 0.03) == 1844);
    CHECK(required_sample_size(0.95, 0.05) == 385);
    CHECK(required_sample_size(0.99, 1.0) == 2); // degenerate margin floor

    CHECK(oracle::required_sample_size(0.99, 0.03) == 1844);
    CHECK(oracle::required_sample_size(0.95, 0.05) == 385);

    for (double c : {0.5, 0.8, 0.9, 0.95, 0.975, 0.99, 0.995, 0.999}) {
        for (double e : {0.01, 0.02, 0.03, 0.05, 0.1, 0.25, 0.5, 1.0}) {
            CAPTURE(c);
            CAPTURE(e);
            CHECK(required_sample_size(c, e) == oracle::required_sample_size(c, e));
        }
    }
    CHECK_THROWS_AS(required_sample_size(0.0, 0.05), Error);
    CHECK_THROWS_AS(required_sample_size(1.0, 0.05), Error);
    CHECK_THROWS_AS(required_sample_size(0.9, 0.0), Error);
}

TEST_CASE("shareability: per-P shares, weighting and the anonymous rule") {
    // P1 requested by three of the method's four sessions, P2 by the fourth.
    std::vector<CallRecord> records = {
        rec("m/1", {1}, 10, 5, "u1"), rec("m/1", {1}, 10, 5, "u2"),
        rec("m/1", {1}, 10, 5, "u3"), rec("m/1", {2}, 20, 5, "u4")};
    const MethodStats& s = aggregate(records).at(MethodId{"m/1"});
    REQUIRE(s.total_sessions() == 4);
    const auto p1 = param_list_key(records[0].params);
    CHECK(double(s.sessions_by_params.at(p1).size()) / double(s.total_sessions()) == 0.75);
    // method-level: call-weighted mean (0.75*3 + 0.25*1) / 4
    CHECK(*shareability(s) == doctest::Approx(0.625).epsilon(1e-12));

    SUBCASE("all calls anonymous -> absent") {
        std::vector<CallRecord> anon = {rec("m/1", {1}, 10, 5), rec("m/1", {1}, 10, 5)};
        CHECK_FALSE(shareability(aggregate(anon).at(MethodId{"m/1"})).has_value());
    }
    SUBCASE("single session, single P -> 1.0") {
        std::vector<CallRecord> solo = {rec("m/1", {1}, 10, 5, "u1")};
        CHECK(*shareability(aggregate(solo).at(MethodId{"m/1"})) == 1.0);
    }
}

TEST_CASE("decision chain: every step pinned on a six-method fixture") {
    // thresholds chosen so the frequency threshold is 3 calls
    CriteriaThresholds th;
    th.confidence = 0.9;
    th.margin = 0.5;
    REQUIRE(required_sample_size(th.confidence, th.margin) == 3);

    std::vector<CallRecord> records;
    // a.static: completely static, anonymous
    for (int i = 0; i < 4; ++i) records.push_back(rec("a.static/1", {1}, 10, 100));
    // b.volatile: one P, four results -> changeability 0.75, above the mean
    for (int i = 0; i < 4; ++i) records.push_back(rec("b.volatile/1", {1}, i, 100));
    // c.user: per-session params, share 0.5, cheap -> falls through
    records.push_back(rec("c.user/1", {1}, 10, 100, "u1"));
    records.push_back(rec("c.user/1", {1}, 11, 100, "u1"));
    records.push_back(rec("c.user/1", {2}, 20, 100, "u2"));
    records.push_back(rec("c.user/1", {2}, 20, 100, "u2"));
    // d.shared: both Ps used by all three sessions -> share 1.0, shared
    records.push_back(rec("d.shared/1", {1}, 30, 100, "u1"));
    records.push_back(rec("d.shared/1", {1}, 30, 100, "u2"));
    records.push_back(rec("d.shared/1", {1}, 31, 100, "u3"));
    records.push_back(rec("d.shared/1", {2}, 32, 100, "u1"));
    records.push_back(rec("d.shared/1", {2}, 32, 100, "u2"));
    records.push_back(rec("d.shared/1", {2}, 32, 100, "u3"));
    // e.pricey: expensive, anonymous, mildly changing
    records.push_back(rec("e.pricey/1", {1}, 40, 10000));
    records.push_back(rec("e.pricey/1", {1}, 40, 10000));
    records.push_back(rec("e.pricey/1", {1}, 41, 10000));
    records.push_back(rec("e.pricey/1", {2}, 42, 10000));
    records.push_back(rec("e.pricey/1", {2}, 42, 10000));
    records.push_back(rec("e.pricey/1", {2}, 42, 10000));
    // f.user: same shape as c.user, keeps the share population honest
    records.push_back(rec("f.user/1", {1}, 50, 100, "u3"));
    records.push_back(rec("f.user/1", {1}, 51, 100, "u3"));
    records.push_back(rec("f.user/1", {2}, 52, 100, "u4"));
    records.push_back(rec("f.user/1", {2}, 52, 100, "u4"));
    // g.rare: too few calls (changeability 0.5 keeps the population mean
    // above the 1/3 of the c/d/e/f methods)
    records.push_back(rec("g.rare/1", {1}, 60, 100));
    records.push_back(rec("g.rare/1", {1}, 61, 100));

    auto stats = aggregate(records);
    DecisionModel model = build_model(stats, th, {}, 42);

    auto decision = [&](const std::string& sig) {
        return model.verdicts.at(MethodId{sig});
    };
    CHECK(decision("a.static/1").decision == Decision::Cacheable);
    CHECK(decision("a.static/1").deciding_criterion == "staticity:completely_static");
    CHECK(decision("b.volatile/1").decision == Decision::NotCacheable);
    CHECK(decision("b.volatile/1").deciding_criterion == "changeability:above_tolerance");
    CHECK(decision("c.user/1").decision == Decision::NotCacheable);
    CHECK(decision("c.user/1").deciding_criterion == "fallthrough:no_criterion_met");
    CHECK(decision("d.shared/1").decision == Decision::Cacheable);
    CHECK(decision("d.shared/1").deciding_criterion == "shareability:shared");
    CHECK(decision("e.pricey/1").decision == Decision::Cacheable);
    CHECK(decision("e.pricey/1").deciding_criterion == "expensiveness:expensive");
    CHECK(decision("f.user/1").decision == Decision::NotCacheable);
    CHECK(decision("g.rare/1").decision == Decision::Undefined);
    CHECK(decision("g.rare/1").deciding_criterion == "frequency:insufficient_sample");
    CHECK_FALSE(decision("g.rare/1").frequent);

    // the independent oracle agrees on every verdict
    auto expected = oracle::verdicts(records, th);
    for (const auto& [method, v] : model.verdicts) {
        CAPTURE(method.signature);
        CHECK(v.decision == expected.at(method.signature));
    }

    SUBCASE("boundary: changeability exactly at mu + k*sigma is not rejected") {
        // two methods with identical changeability 0.5 and k = 0: each sits
        // exactly on the mean and must fall through, not fail step 3
        std::vector<CallRecord> pair;
        for (int i = 0; i < 3; ++i) pair.push_back(rec("x/0", {}, i % 2, 100));
        for (int i = 0; i < 3; ++i) pair.push_back(rec("y/0", {}, i % 2, 100));
        auto m = build_model(aggregate(pair), th, {}, 0);
        CHECK(m.verdicts.at(MethodId{"x/0"}).changeability == 0.5);
        CHECK(m.population.mu_changeability == 0.5);
        CHECK(m.verdicts.at(MethodId{"x/0"}).deciding_criterion ==
              "fallthrough:no_criterion_met");
        CHECK(m.verdicts.at(MethodId{"y/0"}).deciding_criterion ==
              "fallthrough:no_criterion_met");
    }
}

TEST_CASE("hints override verdicts, even with zero traces") {
    CriteriaThresholds th;
    th.confidence = 0.9;
    th.margin = 0.5;
    std::vector<CallRecord> records;
    for (int i = 0; i < 4; ++i) records.push_back(rec("hot/1", {1}, 10, 100));

    std::vector<TrackingHint> hints = {
        {MethodId{"hot/1"}, HintMode::NeverCache},
        {MethodId{"cold/1"}, HintMode::AlwaysCache},
    };
    DecisionModel model = build_model(aggregate(records), th, hints, 0);
    CHECK(model.verdicts.at(MethodId{"hot/1"}).decision == Decision::NotCacheable);
    CHECK(model.verdicts.at(MethodId{"hot/1"}).deciding_criterion == "hint:never_cache");
    CHECK(model.verdicts.at(MethodId{"cold/1"}).decision == Decision::Cacheable);
    CHECK(model.verdicts.at(MethodId{"cold/1"}).call_count == 0);
    CHECK(model.decision_for(MethodId{"unseen/9"}) == Decision::Undefined);
}

TEST_CASE("population standard deviation uses the population form") {
    CriteriaThresholds th;
    th.confidence = 0.9;
    th.margin = 0.5;
    std::vector<CallRecord> records;
    for (int i = 0; i < 3; ++i) records.push_back(rec("p/0", {}, 1, 100));
    for (int i = 0; i < 3; ++i) records.push_back(rec("q/0", {}, 1, 300));
    DecisionModel model = build_model(aggregate(records), th, {}, 0);
    CHECK(model.population.mu_cost_us == 200.0);
    CHECK(model.population.sigma_cost_us == 100.0); // population, not sample (=~141)
}

TEST_CASE("oracle equivalence over random trace sets") {
    std::mt19937_64 rng(31337);
    CriteriaThresholds th;
    th.confidence = 0.9;
    th.margin = 0.2; // sample size 17: all three decisions occur
    for (int round = 0; round < 100; ++round) {
        auto records = gen::random_records(rng, 1000, 12);
        auto stats = aggregate(records);
        auto grouped = oracle::group_by_method(records);

        REQUIRE(stats.size() == grouped.size());
        for (const auto& [method, s] : stats) {
            const auto& view = grouped.at(method.signature);
            REQUIRE(s.call_count == view.records.size());
            REQUIRE(s.p_set_size() == oracle::p_set_size(view));
            REQUIRE(s.pr_set_size() == oracle::pr_set_size(view));
            REQUIRE(staticity(s) == oracle::staticity(view));
            REQUIRE(s.cost_mean_us() == oracle::cost_mean(view));
            auto sh = shareability(s);
            auto osh = oracle::shareability(view);
            REQUIRE(sh.has_value() == osh.has_value());
            if (sh) REQUIRE(*sh == doctest::Approx(*osh).epsilon(1e-12));
        }

        DecisionModel model = build_model(stats, th, {}, 0);
        auto expected = oracle::verdicts(records, th);
        for (const auto& [method, v] : model.verdicts) {
            CAPTURE(round);
            CAPTURE(method.signature);
            REQUIRE(v.decision == expected.at(method.signature));
        }
    }
}
