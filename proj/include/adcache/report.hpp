#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adcache/miner.hpp"
#include "adcache/trace.hpp"

namespace adcache {

struct TraceReadResult {
    std::vector<CallRecord> records;
    std::uint64_t malformed_lines = 0;
    std::uint64_t total_lines = 0;
};

/// Read a JSONL trace log, tolerating up to max_errors malformed lines.
/// Throws Error when the file cannot be opened or the error budget is spent.
TraceReadResult read_trace_file(const std::string& path, std::uint64_t max_errors);

/// Rows of the advisor report, sorted by (decision, descending cost mean,
/// method id). JSON output is byte-deterministic for a given input.
std::string render_report_json(const DecisionModel& model, const TraceReadResult& read,
                               const CriteriaThresholds& thresholds);
std::string render_report_table(const DecisionModel& model, const TraceReadResult& read,
                                const CriteriaThresholds& thresholds);

namespace cli {

struct AnalyzeArgs {
    std::string traces_path;
    CriteriaThresholds thresholds;
    std::string format = "table"; // or "json"
    std::uint64_t max_errors = 1000;
};

struct SimulateArgs {
    std::string scenario_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
};

// Exit codes: 0 success, 1 internal error, 2 unreadable/invalid input.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitBadInput = 2;

int run_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err);
int run_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);

} // namespace cli

} // namespace adcache
