#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "adcache/engine.hpp"
#include "adcache/errors.hpp"
#include "adcache/report.hpp"
#include "adcache/sim.hpp"

namespace py = pybind11;
using namespace adcache;

namespace {

// Python objects map onto the JSON-like subset of the value universe:
// None, bool, int, float, str, list/tuple, dict with str keys. Anything
// else becomes an opaque value, which canonicalize() rejects.
Value value_from_py(const py::handle& obj) {
    if (obj.is_none()) return Value::null();
    if (py::isinstance<py::bool_>(obj)) return Value::boolean(obj.cast<bool>());
    if (py::isinstance<py::int_>(obj)) {
        try {
            return Value::integer(obj.cast<std::int64_t>());
        } catch (const py::cast_error&) {
            return Value::opaque("int out of 64-bit range");
        }
    }
    if (py::isinstance<py::float_>(obj)) return Value::real(obj.cast<double>());
    if (py::isinstance<py::str>(obj)) return Value::text(obj.cast<std::string>());
    if (py::isinstance<py::list>(obj) || py::isinstance<py::tuple>(obj)) {
        std::vector<Value> elems;
        for (const py::handle& el : obj) elems.push_back(value_from_py(el));
        return Value::sequence(std::move(elems));
    }
    if (py::isinstance<py::dict>(obj)) {
        std::vector<std::pair<std::string, Value>> entries;
        for (const auto& item : obj.cast<py::dict>()) {
            if (!py::isinstance<py::str>(item.first))
                return Value::opaque("dict with non-string key");
            entries.emplace_back(item.first.cast<std::string>(),
                                 value_from_py(item.second));
        }
        return Value::map(std::move(entries));
    }
    return Value::opaque(py::str(obj.get_type()).cast<std::string>());
}

py::object value_to_py(const Value& v) {
    switch (v.kind()) {
    case Value::Kind::Null:
        return py::none();
    case Value::Kind::Bool:
        return py::bool_(v.as_bool());
    case Value::Kind::Int:
        return py::int_(v.as_int());
    case Value::Kind::Real:
        return py::float_(v.as_real());
    case Value::Kind::Text:
        return py::str(v.as_text());
    case Value::Kind::Sequence: {
        py::list out;
        for (const Value& el : v.elements()) out.append(value_to_py(el));
        return out;
    }
    case Value::Kind::Map: {
        py::dict out;
        for (const auto& [k, el] : v.entries()) out[py::str(k)] = value_to_py(el);
        return out;
    }
    default:
        throw UnsupportedValueError("value kind not representable in python");
    }
}

std::vector<Value> values_from_py(const py::sequence& params) {
    std::vector<Value> out;
    out.reserve(params.size());
    for (const py::handle& p : params) out.push_back(value_from_py(p));
    return out;
}

HintMode hint_mode_from_string(const std::string& mode) {
    if (mode == "always_track") return HintMode::AlwaysTrack;
    if (mode == "never_track") return HintMode::NeverTrack;
    if (mode == "never_cache") return HintMode::NeverCache;
    if (mode == "always_cache") return HintMode::AlwaysCache;
    throw Error("unknown hint mode '" + mode + "'");
}

} // namespace

PYBIND11_MODULE(_adcache, m) {
    m.doc() = "Adaptive application-level caching: trace mining, cacheability "
              "verdicts, bounded TTL cache and workload simulation";

    py::register_exception<UnsupportedValueError>(m, "UnsupportedValueError",
                                                  PyExc_ValueError);
    py::register_exception<MalformedRecordError>(m, "MalformedRecordError",
                                                 PyExc_ValueError);
    py::register_exception<DuplicateHintError>(m, "DuplicateHintError", PyExc_ValueError);
    py::register_exception<OversizedItemError>(m, "OversizedItemError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);

    m.def(
        "canonical_repr",
        [](const py::object& obj) { return canonicalize(value_from_py(obj)).repr; },
        py::arg("value"),
        "Deterministic structural serialization of a supported value");
    m.def(
        "size_estimate",
        [](const py::object& obj) { return canonicalize(value_from_py(obj)).size_estimate; },
        py::arg("value"));
    m.def(
        "value_from_repr",
        [](const std::string& repr) { return value_to_py(value_from_repr(repr)); },
        py::arg("repr"));
    m.def(
        "call_key_hex",
        [](const std::string& signature, const py::sequence& params) {
            std::vector<CanonicalValue> cparams;
            for (const py::handle& p : params)
                cparams.push_back(canonicalize(value_from_py(p)));
            return call_key(MethodId{signature}, cparams).digest_hex();
        },
        py::arg("signature"), py::arg("params"));
    m.def("required_sample_size", &required_sample_size, py::arg("confidence"),
          py::arg("margin"));

    m.def(
        "analyze_traces_json",
        [](const std::string& path, double confidence, double margin,
           double k_changeability, double k_shareability, double k_expensiveness,
           std::uint64_t max_errors) {
            CriteriaThresholds th{confidence, margin, k_changeability, k_shareability,
                                  k_expensiveness};
            TraceReadResult read = read_trace_file(path, max_errors);
            DecisionModel model = build_model(aggregate(read.records), th, {}, 0);
            return render_report_json(model, read, th);
        },
        py::arg("path"), py::arg("confidence") = 0.99, py::arg("margin") = 0.03,
        py::arg("k_changeability") = 0.0, py::arg("k_shareability") = 1.0,
        py::arg("k_expensiveness") = 1.0, py::arg("max_errors") = 1000,
        "Mine a JSONL trace log; returns the advisor report as a JSON string");

    m.def(
        "simulate_scenario_json",
        [](const std::string& path, const std::optional<std::uint64_t>& seed) {
            sim::Scenario sc = sim::load_scenario(path);
            if (seed) sc.workload.seed = *seed;
            return sim::run_simulation(sc).to_json();
        },
        py::arg("path"), py::arg("seed") = py::none(),
        "Run the workload protocol from a scenario file; returns the report JSON");

    py::class_<VirtualClock, std::shared_ptr<VirtualClock>>(m, "VirtualClock")
        .def(py::init<std::uint64_t>(), py::arg("start_us") = 0)
        .def("now_us", &VirtualClock::now_us)
        .def("advance_us", &VirtualClock::advance_us, py::arg("delta_us"));

    py::class_<CacheStore>(m, "CacheStore")
        .def(py::init([](std::uint64_t capacity_bytes, std::uint64_t ttl_us,
                         const std::string& policy) {
                 return new CacheStore(
                     {capacity_bytes, ttl_us, eviction_policy_from_string(policy)});
             }),
             py::arg("capacity_bytes"), py::arg("ttl_us"), py::arg("policy") = "ttl_only")
        .def(
            "get",
            [](CacheStore& store, const std::string& signature, const py::sequence& params,
               std::uint64_t now_us) -> py::object {
                std::vector<CanonicalValue> cparams;
                for (const py::handle& p : params)
                    cparams.push_back(canonicalize(value_from_py(p)));
                auto hit = store.get(call_key(MethodId{signature}, cparams), now_us);
                if (!hit) return py::none();
                return value_to_py(value_from_repr(hit->repr));
            },
            py::arg("signature"), py::arg("params"), py::arg("now_us"))
        .def(
            "admit",
            [](CacheStore& store, const std::string& signature, const py::sequence& params,
               const py::object& result, std::uint64_t now_us) {
                std::vector<CanonicalValue> cparams;
                for (const py::handle& p : params)
                    cparams.push_back(canonicalize(value_from_py(p)));
                const auto r = store.admit(call_key(MethodId{signature}, cparams),
                                           canonicalize(value_from_py(result)), now_us);
                return r.status == AdmitStatus::Admitted ? "admitted" : "rejected_size";
            },
            py::arg("signature"), py::arg("params"), py::arg("result"), py::arg("now_us"))
        .def("sweep", &CacheStore::sweep, py::arg("now_us"))
        .def("stats_json", [](const CacheStore& store) { return store.stats().to_json(); });

    py::class_<Engine>(m, "Engine")
        .def(py::init([](const py::object& config_path,
                         std::shared_ptr<VirtualClock> clock) {
                 EngineConfig cfg;
                 if (!config_path.is_none())
                     cfg = load_engine_config(config_path.cast<std::string>());
                 apply_env_overrides(cfg);
                 std::shared_ptr<Clock> c = clock;
                 if (!c) c = std::make_shared<SystemClock>();
                 return new Engine(cfg, c);
             }),
             py::arg("config_path") = py::none(), py::arg("clock") = nullptr)
        .def(
            "handle_call",
            [](Engine& engine, const std::string& signature, const py::sequence& params,
               const std::optional<std::string>& session, const py::function& thunk) {
                return value_to_py(engine.handle_call(
                    MethodId{signature}, values_from_py(params), session,
                    [&]() { return value_from_py(thunk()); }));
            },
            py::arg("signature"), py::arg("params"), py::arg("session"), py::arg("thunk"))
        .def(
            "set_hints",
            [](Engine& engine,
               const std::vector<std::pair<std::string, std::string>>& hints) {
                std::vector<TrackingHint> out;
                out.reserve(hints.size());
                for (const auto& [sig, mode] : hints)
                    out.push_back({MethodId{sig}, hint_mode_from_string(mode)});
                engine.set_hints(out);
            },
            py::arg("hints"))
        .def(
            "run_mining_cycle",
            [](Engine& engine, const std::optional<std::uint64_t>& now_us) {
                engine.run_mining_cycle(now_us ? *now_us : engine.clock().now_us());
            },
            py::arg("now_us") = py::none())
        .def("verdicts",
             [](const Engine& engine) {
                 py::dict out;
                 for (const auto& [method, v] : engine.model()->verdicts)
                     out[py::str(method.signature)] = py::str(to_string(v.decision));
                 return out;
             })
        .def("decision_for",
             [](const Engine& engine, const std::string& signature) {
                 return std::string(
                     to_string(engine.model()->decision_for(MethodId{signature})));
             })
        .def("cache_stats_json",
             [](Engine& engine) { return engine.cache().stats().to_json(); });
}
