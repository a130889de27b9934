#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "adcache/engine.hpp"
#include "adcache/errors.hpp"

using namespace adcache;

namespace {

struct Fixture {
    std::shared_ptr<VirtualClock> clock = std::make_shared<VirtualClock>();
    EngineConfig cfg;

    Fixture() {
        cfg.thresholds.confidence = 0.9;
        cfg.thresholds.margin = 0.5; // sample size 3
        cfg.cache.capacity_bytes = 1 << 16;
        cfg.cache.ttl_us = 10'000'000;
        cfg.mining_interval_us = 1000;
        cfg.warmup_window_us = 0; // most tests skip the warmup phase
        cfg.recorder.buffer_capacity = 1 << 16;
    }
};

const MethodId kStatic{"svc.static/1"};

} // namespace

TEST_CASE("undefined methods are invoked and recorded") {
    Fixture fx;
    Engine engine(fx.cfg, fx.clock);
    int runs = 0;
    Value out = engine.handle_call(kStatic, {Value::integer(1)}, std::string("u1"), [&] {
        ++runs;
        return Value::integer(10);
    });
    CHECK(runs == 1);
    CHECK(out.as_int() == 10);
    CHECK(engine.model()->decision_for(kStatic) == Decision::Undefined);
    CHECK(engine.cache().stats().hits + engine.cache().stats().misses == 0);
}

TEST_CASE("planted static traces flip the method to cacheable and hits skip the thunk") {
    Fixture fx;
    Engine engine(fx.cfg, fx.clock);
    std::atomic<int> runs{0};
    auto call = [&](int slot) {
        return engine.handle_call(kStatic, {Value::integer(slot)}, std::string("u1"), [&] {
            ++runs;
            fx.clock->advance_us(100);
            return Value::integer(slot * 10);
        });
    };
    for (int i = 0; i < 2000; ++i) call(i % 3);
    auto model = engine.run_mining_cycle(fx.clock->now_us());
    REQUIRE(model->decision_for(kStatic) == Decision::Cacheable);
    CHECK(model->find(kStatic)->deciding_criterion == "staticity:completely_static");

    const int runs_before = runs.load();
    Value warm = call(0); // key already admitted by the first post-model miss...
    Value warm2 = call(0);
    CHECK(warm.as_int() == 0);
    CHECK(warm2.as_int() == 0);
    CHECK(runs.load() == runs_before + 1); // one miss to admit, then a pure hit
    CHECK(engine.cache().stats().hits >= 1);
}

TEST_CASE("before the warmup window every verdict is undefined and nothing is cached") {
    Fixture fx;
    fx.cfg.warmup_window_us = 1'000'000;
    Engine engine(fx.cfg, fx.clock);
    for (int i = 0; i < 500; ++i)
        engine.handle_call(kStatic, {Value::integer(1)}, std::nullopt,
                           [&] { return Value::integer(7); });
    fx.clock->advance_us(500); // still inside warmup
    auto model = engine.run_mining_cycle(fx.clock->now_us());
    REQUIRE(model->find(kStatic) != nullptr);
    CHECK(model->find(kStatic)->decision == Decision::Undefined);
    CHECK(model->find(kStatic)->deciding_criterion == "warmup:insufficient_data");
    CHECK(engine.cache().stats().live_entries == 0);

    // once the warmup window has elapsed the real chain runs
    fx.clock->advance_us(2'000'000);
    for (int i = 0; i < 10; ++i)
        engine.handle_call(kStatic, {Value::integer(1)}, std::nullopt,
                           [&] { return Value::integer(7); });
    auto real = engine.run_mining_cycle(fx.clock->now_us());
    CHECK(real->decision_for(kStatic) == Decision::Cacheable);
}

TEST_CASE("admission rejected for size leaves the store unchanged but serves the value") {
    Fixture fx;
    fx.cfg.cache.capacity_bytes = 32;
    Engine engine(fx.cfg, fx.clock);
    engine.set_hints({{kStatic, HintMode::AlwaysCache}});

    // first call admits a 17-byte entry; free space drops to 15
    Value big = engine.handle_call(kStatic, {Value::integer(1)}, std::nullopt, [&] {
        return Value::text("aaaaaaaaaaaaaaa"); // repr "s:aaaaaaaaaaaaaaa"
    });
    CHECK(big.as_text() == "aaaaaaaaaaaaaaa");
    CHECK(engine.cache().stats().live_entries == 1);

    // the second key needs 17 >= 15 free bytes: rejected, value still served
    int runs = 0;
    Value out = engine.handle_call(kStatic, {Value::integer(2)}, std::nullopt, [&] {
        ++runs;
        return Value::text("bbbbbbbbbbbbbbb");
    });
    CHECK(runs == 1);
    CHECK(out.as_text() == "bbbbbbbbbbbbbbb");
    auto s = engine.cache().stats();
    CHECK(s.live_entries == 1);
    CHECK(s.rejections_size == 1);
    CHECK(s.evictions == 0);

    // an entry larger than the whole cache degrades to plain invocation
    Value huge = engine.handle_call(kStatic, {Value::integer(3)}, std::nullopt, [&] {
        return Value::text(std::string(100, 'c'));
    });
    CHECK(huge.as_text() == std::string(100, 'c'));
    CHECK(engine.cache().stats().live_entries == 1);
}

TEST_CASE("live hints override the model in both directions") {
    Fixture fx;
    Engine engine(fx.cfg, fx.clock);

    SUBCASE("AlwaysCache caches immediately, even with no mined model") {
        engine.set_hints({{kStatic, HintMode::AlwaysCache}});
        int runs = 0;
        for (int i = 0; i < 3; ++i)
            engine.handle_call(kStatic, {Value::integer(1)}, std::nullopt, [&] {
                ++runs;
                return Value::integer(5);
            });
        CHECK(runs == 1);
        CHECK(engine.cache().stats().hits == 2);
        CHECK(engine.model()->decision_for(kStatic) == Decision::Cacheable);
    }
    SUBCASE("NeverCache blocks admission even when the miner would cache") {
        engine.set_hints({{kStatic, HintMode::NeverCache}});
        for (int i = 0; i < 100; ++i)
            engine.handle_call(kStatic, {Value::integer(1)}, std::nullopt,
                               [&] { return Value::integer(5); });
        auto model = engine.run_mining_cycle(fx.clock->now_us());
        CHECK(model->decision_for(kStatic) == Decision::NotCacheable);
        CHECK(engine.cache().stats().live_entries == 0);
    }
    SUBCASE("NeverTrack wins over everything: no records, no cache") {
        engine.set_hints({{kStatic, HintMode::NeverTrack}});
        for (int i = 0; i < 10; ++i)
            engine.handle_call(kStatic, {Value::integer(1)}, std::nullopt,
                               [&] { return Value::integer(5); });
        auto model = engine.run_mining_cycle(fx.clock->now_us());
        CHECK(model->find(kStatic)->decision == Decision::NotCacheable);
        CHECK(model->find(kStatic)->call_count == 0);
        CHECK(engine.cache().stats().live_entries == 0);
    }
}

TEST_CASE("demoted methods keep recording at the recheck rate") {
    Fixture fx;
    fx.cfg.recheck_sampling_rate = 0.1;
    Engine engine(fx.cfg, fx.clock);
    engine.set_hints({{kStatic, HintMode::NeverCache}});
    for (int i = 0; i < 2000; ++i)
        engine.handle_call(kStatic, {Value::integer(i)}, std::nullopt,
                           [&] { return Value::integer(i); });
    const auto drained = engine.recorder().drain();
    CHECK(drained.size() > 100);
    CHECK(drained.size() < 400); // ~ 2000 * 0.1

    SUBCASE("rate zero silences them completely") {
        fx.cfg.recheck_sampling_rate = 0.0;
        Engine silent(fx.cfg, fx.clock);
        silent.set_hints({{kStatic, HintMode::NeverCache}});
        for (int i = 0; i < 100; ++i)
            silent.handle_call(kStatic, {Value::integer(i)}, std::nullopt,
                               [&] { return Value::integer(i); });
        CHECK(silent.recorder().drain().empty());
    }
}

TEST_CASE("the sliding window ages records out") {
    Fixture fx;
    fx.cfg.mining_interval_us = 1000; // window = 2000us
    Engine engine(fx.cfg, fx.clock);
    for (int i = 0; i < 10; ++i)
        engine.handle_call(kStatic, {Value::integer(1)}, std::nullopt,
                           [&] { return Value::integer(3); });
    auto model = engine.run_mining_cycle(fx.clock->now_us());
    CHECK(model->decision_for(kStatic) == Decision::Cacheable);

    fx.clock->advance_us(5000); // far past the window
    auto aged = engine.run_mining_cycle(fx.clock->now_us());
    CHECK(aged->find(kStatic) == nullptr);
    CHECK(aged->decision_for(kStatic) == Decision::Undefined);
}

TEST_CASE("drained records are persisted to the sink as JSONL") {
    Fixture fx;
    const std::string sink = "engine_test_sink.jsonl";
    std::remove(sink.c_str());
    fx.cfg.recorder.sink_path = sink;
    {
        Engine engine(fx.cfg, fx.clock);
        for (int i = 0; i < 5; ++i)
            engine.handle_call(kStatic, {Value::integer(i)}, std::string("u1"),
                               [&] { return Value::integer(i); });
        engine.run_mining_cycle(fx.clock->now_us());
    }
    std::ifstream in(sink);
    REQUIRE(in.good());
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        CHECK(parse_record(line).method == kStatic);
        ++lines;
    }
    CHECK(lines == 5);
    std::remove(sink.c_str());
}

TEST_CASE("mining cycles and concurrent readers never see a torn model") {
    Fixture fx;
    Engine engine(fx.cfg, fx.clock);
    std::atomic<bool> stop{false};
    std::thread miner([&] {
        std::vector<TrackingHint> a = {{kStatic, HintMode::AlwaysCache}};
        std::vector<TrackingHint> b = {{kStatic, HintMode::NeverCache}};
        for (int i = 0; i < 500; ++i) {
            engine.set_hints(i % 2 ? a : b);
            engine.run_mining_cycle(fx.clock->now_us());
        }
        stop = true;
    });
    std::uint64_t observed = 0;
    while (!stop.load()) {
        auto model = engine.model();
        REQUIRE(model != nullptr);
        const Decision d = model->decision_for(kStatic);
        REQUIRE((d == Decision::Cacheable || d == Decision::NotCacheable ||
                 d == Decision::Undefined));
        ++observed;
    }
    miner.join();
    CHECK(observed > 0);
}

TEST_CASE("config files parse and env overrides win") {
    const std::string path = "engine_test_config.ini";
    {
        std::ofstream out(path);
        out << "# engine settings\n"
               "[recorder]\n"
               "buffer_capacity = 512\n"
               "sampling_rate = 0.5\n"
               "sink = traces.jsonl\n"
               "[cache]\n"
               "capacity_bytes = 4096\n"
               "ttl_us = 2000000\n"
               "policy = lru\n"
               "[thresholds]\n"
               "confidence = 0.95\n"
               "margin = 0.05\n"
               "k_changeability = 0.5\n"
               "[engine]\n"
               "mining_interval_us = 30000000\n"
               "warmup_window_us = 60000000\n"
               "window_intervals = 3\n"
               "recheck_sampling_rate = 0.2\n";
    }
    EngineConfig cfg = load_engine_config(path);
    CHECK(cfg.recorder.buffer_capacity == 512);
    CHECK(cfg.recorder.sampling_rate == 0.5);
    CHECK(cfg.recorder.sink_path == "traces.jsonl");
    CHECK(cfg.cache.capacity_bytes == 4096);
    CHECK(cfg.cache.ttl_us == 2000000);
    CHECK(cfg.cache.policy == EvictionPolicy::Lru);
    CHECK(cfg.thresholds.confidence == 0.95);
    CHECK(cfg.thresholds.margin == 0.05);
    CHECK(cfg.thresholds.k_changeability == 0.5);
    CHECK(cfg.mining_interval_us == 30000000);
    CHECK(cfg.warmup_window_us == 60000000);
    CHECK(cfg.window_intervals == 3);
    CHECK(cfg.recheck_sampling_rate == 0.2);

    setenv("ADCACHE_CAPACITY_BYTES", "8192", 1);
    setenv("ADCACHE_TTL_US", "99", 1);
    setenv("ADCACHE_MINING_INTERVAL_US", "777", 1);
    apply_env_overrides(cfg);
    CHECK(cfg.cache.capacity_bytes == 8192);
    CHECK(cfg.cache.ttl_us == 99);
    CHECK(cfg.mining_interval_us == 777);
    unsetenv("ADCACHE_CAPACITY_BYTES");
    unsetenv("ADCACHE_TTL_US");
    unsetenv("ADCACHE_MINING_INTERVAL_US");

    CHECK_THROWS_AS(load_engine_config("no_such_file.ini"), ConfigError);
    CHECK_THROWS_AS(parse_engine_config("[cache]\npolicy = random\n"), ConfigError);
    CHECK_THROWS_AS(parse_engine_config("[cache]\nunknown_key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_engine_config("capacity 4096\n"), ConfigError);
    std::remove(path.c_str());
}

TEST_CASE("replaying the same window yields the same model") {
    Fixture fx;
    auto run = [&] {
        auto clock = std::make_shared<VirtualClock>();
        Engine engine(fx.cfg, clock);
        for (int i = 0; i < 200; ++i) {
            engine.handle_call(kStatic, {Value::integer(i % 5)}, std::string("u1"), [&] {
                clock->advance_us(50);
                return Value::integer(i % 5);
            });
            engine.handle_call(MethodId{"svc.noisy/0"}, {}, std::string("u2"), [&] {
                clock->advance_us(10);
                return Value::integer(i);
            });
        }
        return engine.run_mining_cycle(clock->now_us());
    };
    auto a = run();
    auto b = run();
    REQUIRE(a->verdicts.size() == b->verdicts.size());
    for (const auto& [method, v] : a->verdicts) {
        const Verdict* w = b->find(method);
        REQUIRE(w != nullptr);
        CHECK(v.decision == w->decision);
        CHECK(v.staticity == w->staticity);
        CHECK(v.cost_mean_us == w->cost_mean_us);
        CHECK(v.deciding_criterion == w->deciding_criterion);
    }
    CHECK(a->population.mu_changeability == b->population.mu_changeability);
}
