#include <iostream>

#include <CLI11.hpp>

#include "adcache/report.hpp"

int main(int argc, char** argv) {
    CLI::App app{"adcache: trace-driven cacheability advisor and workload simulator"};
    app.require_subcommand(1);

    adcache::cli::AnalyzeArgs analyze_args;
    CLI::App* analyze = app.add_subcommand(
        "analyze", "Mine a JSONL trace log and print per-method cacheability verdicts");
    analyze->add_option("--traces", analyze_args.traces_path, "Trace log (JSON lines)")
        ->required();
    analyze->add_option("--confidence", analyze_args.thresholds.confidence,
                        "Confidence level for the frequency sample size");
    analyze->add_option("--margin", analyze_args.thresholds.margin,
                        "Margin of error for the frequency sample size");
    analyze->add_option("--k-changeability", analyze_args.thresholds.k_changeability,
                        "Changeability tolerance in standard deviations");
    analyze->add_option("--k-shareability", analyze_args.thresholds.k_shareability,
                        "Shareability threshold in standard deviations");
    analyze->add_option("--k-expensiveness", analyze_args.thresholds.k_expensiveness,
                        "Expensiveness threshold in standard deviations");
    analyze->add_option("--format", analyze_args.format, "Output format")
        ->check(CLI::IsMember({"table", "json"}));
    analyze->add_option("--max-errors", analyze_args.max_errors,
                        "Tolerated malformed trace lines");

    adcache::cli::SimulateArgs simulate_args;
    std::uint64_t seed_flag = 0;
    CLI::App* simulate = app.add_subcommand(
        "simulate", "Run the synthetic workload protocol and write a JSON report");
    simulate->add_option("--scenario", simulate_args.scenario_path, "Scenario file (JSON)")
        ->required();
    simulate->add_option("--out", simulate_args.out_path, "Report output path")->required();
    CLI::Option* seed_opt =
        simulate->add_option("--seed", seed_flag, "Override the scenario seed");

    CLI11_PARSE(app, argc, argv);

    if (analyze->parsed())
        return adcache::cli::run_analyze(analyze_args, std::cout, std::cerr);
    if (simulate->parsed()) {
        if (seed_opt->count() > 0) simulate_args.seed = seed_flag;
        return adcache::cli::run_simulate(simulate_args, std::cout, std::cerr);
    }
    return adcache::cli::kExitInternal;
}
