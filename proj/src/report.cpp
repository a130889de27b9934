#include "adcache/report.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "adcache/errors.hpp"
#include "adcache/sim.hpp"

namespace adcache {

using nlohmann::json;

TraceReadResult read_trace_file(const std::string& path, std::uint64_t max_errors) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open trace file: " + path);
    TraceReadResult out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.total_lines += 1;
        try {
            out.records.push_back(parse_record(line));
        } catch (const MalformedRecordError&) {
            out.malformed_lines += 1;
            if (out.malformed_lines > max_errors)
                throw Error("more than " + std::to_string(max_errors) +
                            " malformed lines in " + path);
        }
    }
    return out;
}

namespace {

int decision_rank(Decision d) {
    switch (d) {
    case Decision::Cacheable:
        return 0;
    case Decision::NotCacheable:
        return 1;
    case Decision::Undefined:
        return 2;
    }
    return 2;
}

std::vector<const Verdict*> sorted_rows(const DecisionModel& model) {
    std::vector<const Verdict*> rows;
    rows.reserve(model.verdicts.size());
    for (const auto& [method, v] : model.verdicts) rows.push_back(&v);
    std::sort(rows.begin(), rows.end(), [](const Verdict* a, const Verdict* b) {
        const int ra = decision_rank(a->decision), rb = decision_rank(b->decision);
        if (ra != rb) return ra < rb;
        if (a->cost_mean_us != b->cost_mean_us) return a->cost_mean_us > b->cost_mean_us;
        return a->method < b->method;
    });
    return rows;
}

} // namespace

std::string render_report_json(const DecisionModel& model, const TraceReadResult& read,
                               const CriteriaThresholds& thresholds) {
    json j;
    j["schema"] = "adcache-report/1";
    j["records_read"] = read.records.size();
    j["records_rejected"] = read.malformed_lines;
    j["required_sample_size"] = model.required_samples;
    json th;
    th["confidence"] = thresholds.confidence;
    th["margin"] = thresholds.margin;
    th["k_changeability"] = thresholds.k_changeability;
    th["k_shareability"] = thresholds.k_shareability;
    th["k_expensiveness"] = thresholds.k_expensiveness;
    j["thresholds"] = std::move(th);
    json pop;
    pop["mu_changeability"] = model.population.mu_changeability;
    pop["sigma_changeability"] = model.population.sigma_changeability;
    pop["mu_shareability"] = model.population.mu_shareability;
    pop["sigma_shareability"] = model.population.sigma_shareability;
    pop["mu_cost_us"] = model.population.mu_cost_us;
    pop["sigma_cost_us"] = model.population.sigma_cost_us;
    j["population"] = std::move(pop);
    json methods = json::array();
    for (const Verdict* v : sorted_rows(model)) {
        json m;
        m["method"] = v->method.signature;
        m["decision"] = to_string(v->decision);
        m["calls"] = v->call_count;
        m["staticity"] = v->staticity;
        m["changeability"] = v->changeability;
        m["frequent"] = v->frequent;
        if (v->shareability)
            m["shareability"] = *v->shareability;
        else
            m["shareability"] = nullptr;
        m["cost_mean_us"] = v->cost_mean_us;
        m["deciding_criterion"] = v->deciding_criterion;
        methods.push_back(std::move(m));
    }
    j["methods"] = std::move(methods);
    return j.dump(2) + "\n";
}

std::string render_report_table(const DecisionModel& model, const TraceReadResult& read,
                                const CriteriaThresholds& thresholds) {
    std::ostringstream out;
    out << "traces: " << read.records.size() << " records";
    if (read.malformed_lines) out << " (" << read.malformed_lines << " malformed)";
    out << "  required sample size: " << model.required_samples << " (confidence "
        << thresholds.confidence << ", margin " << thresholds.margin << ")\n";
    out << std::left << std::setw(40) << "method" << std::setw(15) << "decision"
        << std::right << std::setw(9) << "calls" << std::setw(11) << "staticity"
        << std::setw(9) << "share" << std::setw(14) << "cost_mean_us" << "  criterion\n";
    out << std::string(110, '-') << '\n';
    out << std::fixed;
    for (const Verdict* v : sorted_rows(model)) {
        out << std::left << std::setw(40) << v->method.signature << std::setw(15)
            << to_string(v->decision) << std::right << std::setw(9) << v->call_count
            << std::setw(11) << std::setprecision(4) << v->staticity << std::setw(9);
        if (v->shareability)
            out << std::setprecision(2) << *v->shareability;
        else
            out << "-";
        out << std::setw(14) << std::setprecision(1) << v->cost_mean_us << "  "
            << v->deciding_criterion << '\n';
    }
    return out.str();
}

namespace cli {

int run_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err) {
    TraceReadResult read;
    try {
        read = read_trace_file(args.traces_path, args.max_errors);
    } catch (const std::exception& e) {
        err << "adcache: " << e.what() << '\n';
        return kExitBadInput;
    }
    try {
        auto stats = aggregate(read.records);
        DecisionModel model = build_model(stats, args.thresholds, {}, 0);
        if (args.format == "json")
            out << render_report_json(model, read, args.thresholds);
        else
            out << render_report_table(model, read, args.thresholds);
        return kExitOk;
    } catch (const std::exception& e) {
        err << "adcache: internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

int run_simulate(const SimulateArgs& args, std::ostream& /*out*/, std::ostream& err) {
    sim::Scenario scenario;
    try {
        scenario = sim::load_scenario(args.scenario_path);
        if (args.seed) scenario.workload.seed = *args.seed;
    } catch (const std::exception& e) {
        err << "adcache: " << e.what() << '\n';
        return kExitBadInput;
    }
    try {
        const sim::SimulationReport report = sim::run_simulation(scenario);
        std::ofstream file(args.out_path);
        if (!file) {
            err << "adcache: cannot write " << args.out_path << '\n';
            return kExitBadInput;
        }
        file << report.to_json();
        return kExitOk;
    } catch (const std::exception& e) {
        err << "adcache: internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

} // namespace cli

} // namespace adcache
