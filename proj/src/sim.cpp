#include "adcache/sim.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "adcache/errors.hpp"

namespace adcache::sim {

using nlohmann::json;

const char* to_string(SimConfig config) {
    switch (config) {
    case SimConfig::NO:
        return "NO";
    case SimConfig::AP:
        return "AP";
    case SimConfig::DEV:
        return "DEV";
    }
    return "NO";
}

const char* to_string(MethodProfile profile) {
    switch (profile) {
    case MethodProfile::Static:
        return "static";
    case MethodProfile::LowChange:
        return "low_change";
    case MethodProfile::Volatile:
        return "volatile";
    case MethodProfile::Expensive:
        return "expensive";
    case MethodProfile::UserSpecific:
        return "user_specific";
    }
    return "static";
}

MethodProfile profile_from_string(const std::string& name) {
    if (name == "static") return MethodProfile::Static;
    if (name == "low_change") return MethodProfile::LowChange;
    if (name == "volatile") return MethodProfile::Volatile;
    if (name == "expensive") return MethodProfile::Expensive;
    if (name == "user_specific") return MethodProfile::UserSpecific;
    throw ScenarioError("unknown method profile '" + name + "'");
}

SimConfig sim_config_from_string(const std::string& name) {
    if (name == "NO") return SimConfig::NO;
    if (name == "AP") return SimConfig::AP;
    if (name == "DEV") return SimConfig::DEV;
    throw ScenarioError("unknown configuration '" + name + "' (expected NO, AP or DEV)");
}

std::map<MethodId, Decision> plant_ground_truth(const SyntheticApp& app) {
    std::map<MethodId, Decision> truth;
    for (const ProfileSpec& m : app.methods) {
        switch (m.profile) {
        case MethodProfile::Static:
        case MethodProfile::Expensive:
        case MethodProfile::LowChange:
            truth[m.method] = Decision::Cacheable;
            break;
        case MethodProfile::Volatile:
        case MethodProfile::UserSpecific:
            truth[m.method] = Decision::NotCacheable;
            break;
        }
    }
    return truth;
}

// ---------------------------------------------------------------------------
// Scenario parsing
// ---------------------------------------------------------------------------

namespace {

EngineConfig parse_engine_json(const json& j) {
    EngineConfig cfg;
    if (j.contains("recorder")) {
        const json& r = j["recorder"];
        if (r.contains("buffer_capacity")) cfg.recorder.buffer_capacity = r["buffer_capacity"];
        if (r.contains("sampling_rate")) cfg.recorder.sampling_rate = r["sampling_rate"];
        if (r.contains("sink")) cfg.recorder.sink_path = r["sink"];
    }
    if (j.contains("cache")) {
        const json& c = j["cache"];
        if (c.contains("capacity_bytes")) cfg.cache.capacity_bytes = c["capacity_bytes"];
        if (c.contains("ttl_us")) cfg.cache.ttl_us = c["ttl_us"];
        if (c.contains("policy"))
            cfg.cache.policy = eviction_policy_from_string(c["policy"].get<std::string>());
    }
    if (j.contains("thresholds")) {
        const json& t = j["thresholds"];
        if (t.contains("confidence")) cfg.thresholds.confidence = t["confidence"];
        if (t.contains("margin")) cfg.thresholds.margin = t["margin"];
        if (t.contains("k_changeability")) cfg.thresholds.k_changeability = t["k_changeability"];
        if (t.contains("k_shareability")) cfg.thresholds.k_shareability = t["k_shareability"];
        if (t.contains("k_expensiveness")) cfg.thresholds.k_expensiveness = t["k_expensiveness"];
    }
    if (j.contains("mining_interval_us")) cfg.mining_interval_us = j["mining_interval_us"];
    if (j.contains("warmup_window_us")) cfg.warmup_window_us = j["warmup_window_us"];
    if (j.contains("window_intervals")) cfg.window_intervals = j["window_intervals"];
    if (j.contains("recheck_sampling_rate"))
        cfg.recheck_sampling_rate = j["recheck_sampling_rate"];
    if (j.contains("seed")) cfg.seed = j["seed"];
    return cfg;
}

} // namespace

Scenario parse_scenario_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ScenarioError("scenario is not a JSON object");
    try {
        Scenario sc;
        const json& app = j.at("app");
        for (const json& m : app.at("methods")) {
            ProfileSpec p;
            p.method.signature = m.at("name").get<std::string>();
            p.profile = profile_from_string(m.at("profile").get<std::string>());
            if (m.contains("cost_us")) p.cost_us = m["cost_us"];
            if (m.contains("param_space")) p.param_space = m["param_space"];
            if (m.contains("per_user_params")) p.per_user_params = m["per_user_params"];
            if (m.contains("drift_keys")) p.drift_keys = m["drift_keys"];
            if (m.contains("drift_every_writes")) p.drift_every_writes = m["drift_every_writes"];
            if (m.contains("flip_every_users")) p.flip_every_users = m["flip_every_users"];
            if (m.contains("flip_at_call")) p.flip_at_call = m["flip_at_call"];
            if (p.param_space < 1) throw ScenarioError("param_space must be >= 1");
            sc.app.methods.push_back(std::move(p));
        }
        for (const json& pg : app.at("pages")) {
            PageSpec page;
            page.name = pg.at("name").get<std::string>();
            for (const json& m : pg.at("calls")) page.methods.push_back(m.get<std::string>());
            if (pg.contains("links")) {
                for (const auto& [to, weight] : pg["links"].items())
                    page.links.emplace_back(to, weight.get<double>());
                std::sort(page.links.begin(), page.links.end());
            }
            sc.app.pages.push_back(std::move(page));
        }
        if (sc.app.pages.empty()) throw ScenarioError("scenario has no pages");
        sc.app.home = app.contains("home") ? app["home"].get<std::string>()
                                           : sc.app.pages.front().name;

        if (j.contains("workload")) {
            const json& w = j["workload"];
            if (w.contains("users")) sc.workload.users = w["users"].get<std::vector<int>>();
            if (w.contains("requests_per_user"))
                sc.workload.requests_per_user = w["requests_per_user"];
            if (w.contains("read_fraction")) sc.workload.read_fraction = w["read_fraction"];
            if (w.contains("seed")) sc.workload.seed = w["seed"];
            if (w.contains("repetitions")) sc.workload.repetitions = w["repetitions"];
            if (w.contains("request_overhead_us"))
                sc.workload.request_overhead_us = w["request_overhead_us"];
        }
        if (!(sc.workload.read_fraction >= 0.0 && sc.workload.read_fraction <= 1.0))
            throw ScenarioError("read_fraction must be in [0,1]");
        if (sc.workload.requests_per_user < 1)
            throw ScenarioError("requests_per_user must be >= 1");
        for (int u : sc.workload.users)
            if (u < 1) throw ScenarioError("user counts must be >= 1");

        if (j.contains("engine")) sc.engine = parse_engine_json(j["engine"]);

        if (j.contains("configurations")) {
            sc.configurations.clear();
            for (const json& c : j["configurations"])
                sc.configurations.push_back(sim_config_from_string(c.get<std::string>()));
        }
        if (j.contains("dev_hints"))
            for (const json& h : j["dev_hints"])
                sc.dev_hints.push_back(MethodId{h.get<std::string>()});

        if (j.contains("flip")) {
            FlipSpec f;
            f.method.signature = j["flip"].at("method").get<std::string>();
            if (j["flip"].contains("at_request_fraction"))
                f.at_request_fraction = j["flip"]["at_request_fraction"];
            if (j["flip"].contains("to_profile"))
                f.to_profile = profile_from_string(j["flip"]["to_profile"].get<std::string>());
            sc.flip = std::move(f);
        }

        // Cross-checks: pages reference known methods and link targets exist.
        std::set<std::string> method_names;
        for (const ProfileSpec& m : sc.app.methods) method_names.insert(m.method.signature);
        std::set<std::string> page_names;
        for (const PageSpec& p : sc.app.pages) page_names.insert(p.name);
        for (const PageSpec& p : sc.app.pages) {
            for (const std::string& m : p.methods)
                if (!method_names.count(m))
                    throw ScenarioError("page " + p.name + " calls unknown method " + m);
            for (const auto& [to, w] : p.links) {
                if (!page_names.count(to))
                    throw ScenarioError("page " + p.name + " links to unknown page " + to);
                if (!(w > 0)) throw ScenarioError("link weights must be positive");
            }
        }
        if (!page_names.count(sc.app.home))
            throw ScenarioError("home page " + sc.app.home + " does not exist");
        return sc;
    } catch (const json::exception& e) {
        throw ScenarioError(std::string("scenario: ") + e.what());
    }
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_json(buf.str());
}

// ---------------------------------------------------------------------------
// Workload execution
// ---------------------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = splitmix64(seed ^ (a * 0x9e3779b97f4a7c15ULL));
    h = splitmix64(h ^ (b * 0xc2b2ae3d27d4eb4fULL));
    return splitmix64(h ^ (c * 0x165667b19e3779f9ULL));
}

double u01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t pick_below(std::mt19937_64& rng, std::uint64_t n) {
    return static_cast<std::uint64_t>(u01(rng) * static_cast<double>(n)) % n;
}

struct MethodState {
    const ProfileSpec* spec = nullptr;
    MethodProfile profile = MethodProfile::Static;
    std::uint64_t writes = 0;
    std::uint64_t fresh = 0;
    std::map<std::string, std::uint64_t> calls_by_user;
};

struct UserState {
    std::mt19937_64 rng;
    std::size_t page = 0;
    std::string session;
    int index = 0;
};

} // namespace

RunResult run_single(const Scenario& scenario, SimConfig config, int users, int repetition) {
    RunResult result;
    const SyntheticApp& app = scenario.app;
    const WorkloadSpec& wl = scenario.workload;

    std::map<std::string, const PageSpec*> pages;
    for (const PageSpec& p : app.pages) pages[p.name] = &p;
    std::map<std::string, MethodState> states;
    for (const ProfileSpec& m : app.methods)
        states[m.method.signature] = MethodState{&m, m.profile, 0, 0, {}};

    const std::uint64_t config_tag = static_cast<std::uint64_t>(config) + 1;
    auto clock = std::make_shared<VirtualClock>();

    std::unique_ptr<Engine> engine;
    if (config != SimConfig::NO) {
        EngineConfig ecfg = scenario.engine;
        ecfg.seed = mix_seed(wl.seed ^ ecfg.seed, config_tag, users, repetition);
        engine = std::make_unique<Engine>(ecfg, clock);
        if (config == SimConfig::DEV) {
            engine->set_mining_enabled(false);
            std::vector<TrackingHint> hints;
            for (const MethodId& m : scenario.dev_hints)
                hints.push_back({m, HintMode::AlwaysCache});
            engine->set_hints(hints);
        }
    }

    std::vector<UserState> user_states(static_cast<std::size_t>(users));
    std::size_t home_index = 0;
    for (std::size_t i = 0; i < app.pages.size(); ++i)
        if (app.pages[i].name == app.home) home_index = i;
    std::map<std::string, std::size_t> page_index;
    for (std::size_t i = 0; i < app.pages.size(); ++i) page_index[app.pages[i].name] = i;

    for (int u = 0; u < users; ++u) {
        UserState& us = user_states[static_cast<std::size_t>(u)];
        us.rng.seed(mix_seed(wl.seed, config_tag * 1000 + 7, users * 100 + repetition,
                             static_cast<std::uint64_t>(u)));
        us.page = home_index;
        us.session = "u" + std::to_string(u);
        us.index = u;
    }

    const std::uint64_t warmup_end = scenario.engine.warmup_window_us;
    const std::uint64_t total_requests =
        static_cast<std::uint64_t>(users) * static_cast<std::uint64_t>(wl.requests_per_user);
    const std::uint64_t flip_at = scenario.flip
        ? static_cast<std::uint64_t>(scenario.flip->at_request_fraction *
                                     static_cast<double>(total_requests))
        : total_requests + 1;
    bool flipped = false;

    std::uint64_t request_counter = 0;
    const std::uint64_t started = clock->now_us();

    auto visit = [&](UserState& us) {
        const PageSpec& page = app.pages[us.page];
        const bool write = u01(us.rng) >= wl.read_fraction;
        if (write) {
            result.write_requests += 1;
            for (const std::string& mname : page.methods) states[mname].writes += 1;
        } else {
            result.read_requests += 1;
        }

        for (const std::string& mname : page.methods) {
            MethodState& st = states[mname];
            const ProfileSpec& spec = *st.spec;

            std::vector<Value> params;
            std::string tag;
            if (st.profile == MethodProfile::UserSpecific) {
                params.push_back(Value::text(us.session));
                tag = us.session;
            } else {
                if (spec.per_user_params) {
                    params.push_back(Value::text(us.session));
                    tag = us.session + ";";
                }
                const auto slot = pick_below(us.rng, static_cast<std::uint64_t>(spec.param_space));
                params.push_back(Value::integer(static_cast<std::int64_t>(slot)));
                tag += std::to_string(slot);
            }

            MethodTally& tally = result.tallies[mname];
            const bool post_warmup = clock->now_us() >= started + warmup_end;
            tally.calls += 1;
            if (post_warmup) tally.post_warmup_calls += 1;

            auto thunk = [&]() -> Value {
                tally.invocations += 1;
                if (post_warmup) tally.post_warmup_invocations += 1;
                clock->advance_us(spec.cost_us);
                std::string payload = mname + "#" + tag;
                switch (st.profile) {
                case MethodProfile::Static:
                case MethodProfile::Expensive:
                    break;
                case MethodProfile::LowChange: {
                    std::uint64_t epoch = 0;
                    if (!params.empty() && params.back().kind() == Value::Kind::Int &&
                        params.back().as_int() < spec.drift_keys)
                        epoch = st.writes / static_cast<std::uint64_t>(
                                                std::max(1, spec.drift_every_writes));
                    payload += "#e" + std::to_string(epoch);
                    break;
                }
                case MethodProfile::Volatile:
                    payload += "#v" + std::to_string(st.fresh++);
                    break;
                case MethodProfile::UserSpecific: {
                    const std::uint64_t count = ++st.calls_by_user[us.session];
                    const bool flipped_user =
                        spec.flip_every_users > 0 && us.index % spec.flip_every_users == 0 &&
                        count > static_cast<std::uint64_t>(spec.flip_at_call);
                    payload += "#u" + std::to_string(flipped_user ? 1 : 0);
                    break;
                }
                }
                return Value::text(std::move(payload));
            };

            if (engine) {
                engine->handle_call(spec.method, params, us.session, thunk);
            } else {
                thunk();
            }
        }
        clock->advance_us(wl.request_overhead_us);

        // Navigate: weighted pick among outgoing links, back home on dead ends.
        if (page.links.empty()) {
            us.page = home_index;
        } else {
            double total = 0;
            for (const auto& [to, w] : page.links) total += w;
            double draw = u01(us.rng) * total;
            const std::string* chosen = &page.links.back().first;
            for (const auto& [to, w] : page.links) {
                if (draw < w) {
                    chosen = &to;
                    break;
                }
                draw -= w;
            }
            us.page = page_index[*chosen];
        }
    };

    for (int r = 0; r < wl.requests_per_user; ++r) {
        for (int u = 0; u < users; ++u) {
            if (!flipped && request_counter >= flip_at && scenario.flip) {
                auto it = states.find(scenario.flip->method.signature);
                if (it != states.end()) {
                    it->second.profile = scenario.flip->to_profile;
                    result.flip_cycle_index = result.cycle_models.size();
                }
                flipped = true;
            }
            if (engine) {
                if (auto m = engine->maybe_run_mining_cycle(clock->now_us()))
                    result.cycle_models.push_back(std::move(m));
            }
            visit(user_states[static_cast<std::size_t>(u)]);
            ++request_counter;
        }
    }

    result.elapsed_us = clock->now_us() - started;
    const double elapsed_s =
        static_cast<double>(std::max<std::uint64_t>(1, result.elapsed_us)) / 1e6;
    result.sample.throughput_rps = static_cast<double>(total_requests) / elapsed_s;
    if (engine) {
        const CacheStatsSnapshot stats = engine->cache().stats();
        result.sample.hit_ratio = stats.hit_ratio();
        result.sample.total_hits = stats.hits;
        result.final_model = engine->model();
    } else {
        result.final_model = nullptr;
    }
    return result;
}

SimulationReport run_simulation(const Scenario& scenario) {
    SimulationReport report;
    report.seed = scenario.workload.seed;
    report.repetitions = scenario.workload.repetitions;
    for (SimConfig config : scenario.configurations) {
        for (int users : scenario.workload.users) {
            ReportCell cell;
            cell.configuration = to_string(config);
            cell.users = users;
            double tp = 0, hr = 0, th = 0;
            for (int rep = 0; rep < scenario.workload.repetitions; ++rep) {
                RunResult run = run_single(scenario, config, users, rep);
                cell.samples.push_back(run.sample);
                tp += run.sample.throughput_rps;
                hr += run.sample.hit_ratio;
                th += static_cast<double>(run.sample.total_hits);
            }
            const double n = static_cast<double>(std::max(1, scenario.workload.repetitions));
            cell.throughput_rps = tp / n;
            cell.hit_ratio = hr / n;
            cell.total_hits = th / n;
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

std::string SimulationReport::to_json() const {
    json j;
    j["schema"] = "adcache-simreport/1";
    j["seed"] = seed;
    j["repetitions"] = repetitions;
    json cells_json = json::array();
    for (const ReportCell& cell : cells) {
        json c;
        c["configuration"] = cell.configuration;
        c["users"] = cell.users;
        c["throughput_rps"] = cell.throughput_rps;
        c["hit_ratio"] = cell.hit_ratio;
        c["total_hits"] = cell.total_hits;
        json samples = json::array();
        for (const CellSample& s : cell.samples) {
            json sj;
            sj["throughput_rps"] = s.throughput_rps;
            sj["hit_ratio"] = s.hit_ratio;
            sj["total_hits"] = s.total_hits;
            samples.push_back(std::move(sj));
        }
        c["samples"] = std::move(samples);
        cells_json.push_back(std::move(c));
    }
    j["cells"] = std::move(cells_json);
    return j.dump(2) + "\n";
}

} // namespace adcache::sim
