#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adcache/engine.hpp"
#include "adcache/miner.hpp"

namespace adcache::sim {

/// Ground-truth behavior of a synthetic method. The observable behavior of
/// every method matches its declared profile, which is what makes planted
/// verdicts checkable.
enum class MethodProfile { Static, LowChange, Volatile, Expensive, UserSpecific };

struct ProfileSpec {
    MethodId method;
    MethodProfile profile = MethodProfile::Static;
    std::uint64_t cost_us = 1000;
    int param_space = 4;          // distinct parameter slots pages draw from
    bool per_user_params = false; // prepend the session token to the params
    // LowChange: parameter slots below drift_keys pick up a new result every
    // drift_every_writes write requests that touch this method.
    int drift_keys = 1;
    int drift_every_writes = 200;
    // UserSpecific: users with index % flip_every_users == 0 switch to a
    // second result after their first flip_at_call calls.
    int flip_every_users = 4;
    int flip_at_call = 3;
};

struct PageSpec {
    std::string name;
    std::vector<std::string> methods; // method signatures invoked per visit
    std::vector<std::pair<std::string, double>> links;
};

struct SyntheticApp {
    std::vector<ProfileSpec> methods;
    std::vector<PageSpec> pages;
    std::string home;
};

/// Closed-loop workload: emulated users navigate page to page from the home
/// page following weighted links; a fixed fraction of requests is read-only.
struct WorkloadSpec {
    std::vector<int> users{1, 5, 10, 25, 50};
    int requests_per_user = 500;
    double read_fraction = 0.8;
    std::uint64_t seed = 1;
    int repetitions = 10;
    std::uint64_t request_overhead_us = 1000;
};

/// NO = no caching, AP = the adaptive engine, DEV = hand-annotated hints
/// with mining disabled.
enum class SimConfig { NO, AP, DEV };

/// Mid-run profile change, for adaptivity experiments.
struct FlipSpec {
    MethodId method;
    double at_request_fraction = 0.5;
    MethodProfile to_profile = MethodProfile::Volatile;
};

struct Scenario {
    SyntheticApp app;
    WorkloadSpec workload;
    EngineConfig engine;
    std::vector<SimConfig> configurations{SimConfig::NO, SimConfig::AP};
    std::vector<MethodId> dev_hints;
    std::optional<FlipSpec> flip;
};

/// Scenario files are JSON; see scenarios/ for examples. Throws
/// ScenarioError on missing files or invalid contents.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario_json(const std::string& text);

struct CellSample {
    double throughput_rps = 0.0;
    double hit_ratio = 0.0;
    std::uint64_t total_hits = 0;
};

struct ReportCell {
    std::string configuration;
    int users = 0;
    double throughput_rps = 0.0; // means over repetitions
    double hit_ratio = 0.0;
    double total_hits = 0.0;
    std::vector<CellSample> samples;
};

struct SimulationReport {
    std::uint64_t seed = 0;
    int repetitions = 0;
    std::vector<ReportCell> cells;

    /// Byte-deterministic for a given (scenario, seed).
    std::string to_json() const;
};

struct MethodTally {
    std::uint64_t calls = 0;
    std::uint64_t invocations = 0; // times the thunk actually ran
    std::uint64_t post_warmup_calls = 0;
    std::uint64_t post_warmup_invocations = 0;
};

/// Everything one (configuration, user-count, repetition) run produces.
/// run_simulation aggregates samples; tests reach into the rest.
struct RunResult {
    CellSample sample;
    std::shared_ptr<const DecisionModel> final_model;
    std::vector<std::shared_ptr<const DecisionModel>> cycle_models;
    std::optional<std::size_t> flip_cycle_index; // models published before the flip
    std::map<std::string, MethodTally> tallies;  // by method signature
    std::uint64_t read_requests = 0;
    std::uint64_t write_requests = 0;
    std::uint64_t elapsed_us = 0;
};

RunResult run_single(const Scenario& scenario, SimConfig config, int users, int repetition);

/// The full protocol: every configuration x user-count cell, repeated, with
/// per-cell means. Deterministic given the scenario (bit-for-bit).
SimulationReport run_simulation(const Scenario& scenario);

/// The verdict each profiled method must receive once the miner has enough
/// traces: Static, Expensive and LowChange are cacheable; Volatile and
/// (cheap) UserSpecific are not.
std::map<MethodId, Decision> plant_ground_truth(const SyntheticApp& app);

const char* to_string(SimConfig config);
const char* to_string(MethodProfile profile);
MethodProfile profile_from_string(const std::string& name);
SimConfig sim_config_from_string(const std::string& name);

} // namespace adcache::sim
