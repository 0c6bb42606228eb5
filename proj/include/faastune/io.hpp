#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "faastune/bench.hpp"
#include "faastune/core.hpp"
#include "faastune/multiobj.hpp"
#include "faastune/optimize.hpp"
#include "faastune/pricing.hpp"
#include "faastune/space.hpp"
#include "faastune/surrogate.hpp"

namespace faastune {

using json = nlohmann::json;

/// A file could not be opened or parsed.
class FileError : public Error {
public:
    using Error::Error;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FileError("cannot write file: " + path);
    out << content;
}

namespace detail {

inline json parse_json(const std::string& text, const std::string& origin) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw FileError("malformed JSON in " + origin);
    return j;
}

/// Shortest round-trip decimal text for a double; locale-independent.
inline std::string format_double(double v) { return json(v).dump(); }

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

inline double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw FileError("cannot parse " + what + ": '" + s + "'");
    }
}

inline int parse_int(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw FileError("cannot parse " + what + ": '" + s + "'");
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Search space descriptor (JSON); absent fields fall back to the default grid.
// ---------------------------------------------------------------------------

inline json strategy_to_json(const Strategy& s) {
    if (s.kind == StrategyKind::decoupled) return json("decoupled");
    json j;
    switch (s.kind) {
    case StrategyKind::decoupled_single_family: j["kind"] = "decoupled_single_family"; break;
    case StrategyKind::prop_cpu: j["kind"] = "prop_cpu"; break;
    case StrategyKind::fixed_cpu: j["kind"] = "fixed_cpu"; break;
    case StrategyKind::decoupled: break;
    }
    j["family"] = s.family;
    return j;
}

inline Strategy strategy_from_json(const json& j) {
    if (j.is_string()) {
        const std::string kind = j.get<std::string>();
        if (kind == "decoupled") return Strategy::decoupled();
        throw FileError("strategy '" + kind + "' requires a family; use an object form");
    }
    const std::string kind = j.at("kind").get<std::string>();
    const std::string family = j.value("family", std::string{});
    if (kind == "decoupled") return Strategy::decoupled();
    if (family.empty()) throw FileError("strategy '" + kind + "' requires a family");
    if (kind == "decoupled_single_family") return Strategy::decoupled_single_family(family);
    if (kind == "prop_cpu") return Strategy::prop_cpu(family);
    if (kind == "fixed_cpu") return Strategy::fixed_cpu(family);
    throw FileError("unknown strategy kind: " + kind);
}

inline json space_to_json(const SearchSpace& s) {
    return json{{"cpu_axis", s.cpu_axis},
                {"mem_axis", s.mem_axis},
                {"family_axis", s.family_axis},
                {"memory_floor_mb", s.memory_floor_mb},
                {"strategy", strategy_to_json(s.strategy)}};
}

inline SearchSpace space_from_json(const json& j) {
    SearchSpace s = SearchSpace::default_space();
    if (j.contains("cpu_axis")) s.cpu_axis = j.at("cpu_axis").get<std::vector<double>>();
    if (j.contains("mem_axis")) s.mem_axis = j.at("mem_axis").get<std::vector<int>>();
    if (j.contains("family_axis")) {
        s.family_axis = j.at("family_axis").get<std::vector<std::string>>();
    }
    if (j.contains("memory_floor_mb")) s.memory_floor_mb = j.at("memory_floor_mb").get<int>();
    if (j.contains("strategy")) s.strategy = strategy_from_json(j.at("strategy"));
    if (!std::is_sorted(s.cpu_axis.begin(), s.cpu_axis.end()) ||
        !std::is_sorted(s.mem_axis.begin(), s.mem_axis.end())) {
        throw FileError("space axes must be ascending");
    }
    return s;
}

inline SearchSpace load_space(const std::string& path) {
    return space_from_json(detail::parse_json(read_file(path), path));
}

// ---------------------------------------------------------------------------
// Pricing sheet (CSV) and solved table (JSON)
// ---------------------------------------------------------------------------

inline std::vector<InstancePriceRecord> parse_pricing_csv(const std::string& text,
                                                          const std::string& origin = "pricing") {
    std::istringstream in(text);
    std::string line;
    std::vector<InstancePriceRecord> records;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> f = detail::split_csv_line(line);
        if (!header_seen) {
            header_seen = true;
            if (f.size() >= 6 && f[0] == "family") continue; // header row
        }
        if (f.size() < 6 || f.size() > 7) {
            throw FileError(origin + ": expected 6 or 7 fields, got " +
                            std::to_string(f.size()) + " in line: " + line);
        }
        InstancePriceRecord r;
        r.family = f[0];
        r.alpha = detail::parse_int(f[1], "vCPU count");
        r.beta = detail::parse_double(f[2], "memory GB");
        r.price_per_hour = detail::parse_double(f[3], "price");
        r.cpu_group = f[4];
        r.mem_group = f[5];
        if (f.size() == 7 && !f[6].empty()) {
            r.spot_multiplier = detail::parse_double(f[6], "spot multiplier");
        }
        records.push_back(std::move(r));
    }
    if (records.empty()) throw FileError(origin + ": no price records");
    return records;
}

inline std::vector<InstancePriceRecord> load_pricing_csv(const std::string& path) {
    return parse_pricing_csv(read_file(path), path);
}

inline json pricing_table_to_json(const PricingTable& t) {
    json families = json::object();
    for (const auto& [family, rates] : t.family_rates) {
        json f{{"per_vcpu_hour", rates.per_vcpu_hour}, {"per_gb_hour", rates.per_gb_hour}};
        if (rates.spot_multiplier) f["spot_multiplier"] = *rates.spot_multiplier;
        families[family] = std::move(f);
    }
    return json{{"cpu_group_rates", t.cpu_group_rates},
                {"mem_group_rates", t.mem_group_rates},
                {"families", std::move(families)},
                {"relative_residual", t.relative_residual}};
}

// ---------------------------------------------------------------------------
// Recorded grid (CSV)
// ---------------------------------------------------------------------------

inline std::string grid_to_csv(const GridDataset& grid) {
    std::ostringstream out;
    out << "function_id,input_id,family,cpu_share,memory_mb,rep,status,duration_ms,peak_mem_mb\n";
    for (const auto& [key, reps] : grid.runs()) {
        int rep = 0;
        for (const RunResult& r : reps) {
            out << key.function_id << ',' << key.input_id << ',' << key.config.family << ','
                << detail::format_double(key.config.cpu_share) << ',' << key.config.memory_mb
                << ',' << rep++ << ',' << to_string(r.status) << ',';
            if (r.ok()) {
                out << detail::format_double(r.duration_ms) << ','
                    << detail::format_double(r.peak_mem_mb);
            } else {
                out << ',';
            }
            out << '\n';
        }
    }
    return out.str();
}

/// Parses a grid CSV. When no space is given, the axes are inferred from the
/// distinct values present (families in order of first appearance).
inline GridDataset parse_grid_csv(const std::string& text,
                                  const std::optional<SearchSpace>& declared = {},
                                  const std::string& origin = "grid") {
    struct Row {
        std::string function_id, input_id;
        ResourceConfig config;
        RunResult result;
    };
    std::vector<Row> rows;
    std::istringstream in(text);
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> f = detail::split_csv_line(line);
        if (!header_seen) {
            header_seen = true;
            if (!f.empty() && f[0] == "function_id") continue;
        }
        if (f.size() != 9) {
            throw FileError(origin + ": expected 9 fields, got " + std::to_string(f.size()) +
                            " in line: " + line);
        }
        Row row;
        row.function_id = f[0];
        row.input_id = f[1];
        row.config = {detail::parse_double(f[3], "cpu share"),
                      detail::parse_int(f[4], "memory"), f[2]};
        const std::string& status = f[6];
        if (status == "ok") {
            row.result = RunResult::success(detail::parse_double(f[7], "duration"),
                                            detail::parse_double(f[8], "peak memory"));
        } else if (status == "oom") {
            row.result = RunResult::out_of_memory();
        } else if (status == "timeout") {
            row.result = RunResult::timed_out();
        } else {
            throw FileError(origin + ": unknown status '" + status + "'");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FileError(origin + ": no grid rows");

    SearchSpace space;
    if (declared) {
        space = *declared;
    } else {
        std::vector<double> cpus;
        std::vector<int> mems;
        std::vector<std::string> families;
        for (const Row& r : rows) {
            if (std::find(cpus.begin(), cpus.end(), r.config.cpu_share) == cpus.end()) {
                cpus.push_back(r.config.cpu_share);
            }
            if (std::find(mems.begin(), mems.end(), r.config.memory_mb) == mems.end()) {
                mems.push_back(r.config.memory_mb);
            }
            if (std::find(families.begin(), families.end(), r.config.family) == families.end()) {
                families.push_back(r.config.family);
            }
        }
        std::sort(cpus.begin(), cpus.end());
        std::sort(mems.begin(), mems.end());
        space.cpu_axis = std::move(cpus);
        space.mem_axis = std::move(mems);
        space.family_axis = std::move(families);
    }
    GridDataset grid(space);
    for (const Row& r : rows) grid.add(r.function_id, r.input_id, r.config, r.result);
    return grid;
}

inline GridDataset load_grid_csv(const std::string& path,
                                 const std::optional<SearchSpace>& declared = {}) {
    return parse_grid_csv(read_file(path), declared, path);
}

// ---------------------------------------------------------------------------
// Synthetic function specs (JSON)
// ---------------------------------------------------------------------------

inline json synthetic_spec_to_json(const SyntheticFunctionSpec& s) {
    return json{{"name", s.name},
                {"archetype", to_string(s.archetype)},
                {"serial_ms", s.serial_ms},
                {"parallel_ms", s.parallel_ms},
                {"parallel_cap", s.parallel_cap},
                {"required_mem_mb", s.required_mem_mb},
                {"family_speed", s.family_speed},
                {"input_scale", s.input_scale},
                {"noise_cv", s.noise_cv},
                {"timeout_ms", s.timeout_ms}};
}

inline SyntheticFunctionSpec synthetic_spec_from_json(const json& j) {
    SyntheticFunctionSpec s;
    s.name = j.at("name").get<std::string>();
    const std::string archetype = j.at("archetype").get<std::string>();
    if (archetype == "cpu_bound") {
        s.archetype = Archetype::cpu_bound;
    } else if (archetype == "memory_cliff") {
        s.archetype = Archetype::memory_cliff;
    } else if (archetype == "network_plateau") {
        s.archetype = Archetype::network_plateau;
    } else {
        throw FileError("unknown archetype: " + archetype);
    }
    s.serial_ms = j.at("serial_ms").get<double>();
    s.parallel_ms = j.at("parallel_ms").get<double>();
    s.parallel_cap = j.at("parallel_cap").get<double>();
    s.required_mem_mb = j.at("required_mem_mb").get<int>();
    if (j.contains("family_speed")) {
        s.family_speed = j.at("family_speed").get<std::map<std::string, double>>();
    }
    if (j.contains("input_scale")) {
        s.input_scale = j.at("input_scale").get<std::map<std::string, double>>();
    }
    s.noise_cv = j.value("noise_cv", 0.0);
    s.timeout_ms = j.value("timeout_ms", kDefaultTimeoutMs);
    if (s.serial_ms < 0.0 || s.parallel_ms < 0.0 || s.parallel_cap < 0.25 || s.noise_cv < 0.0) {
        throw FileError("synthetic spec violates its bounds: " + s.name);
    }
    return s;
}

/// Loads either a single spec object or an array of specs.
inline std::vector<SyntheticFunctionSpec> load_synthetic_specs(const std::string& path) {
    const json j = detail::parse_json(read_file(path), path);
    std::vector<SyntheticFunctionSpec> specs;
    if (j.is_array()) {
        for (const json& item : j) specs.push_back(synthetic_spec_from_json(item));
    } else {
        specs.push_back(synthetic_spec_from_json(j));
    }
    if (specs.empty()) throw FileError(path + ": no synthetic specs");
    return specs;
}

// ---------------------------------------------------------------------------
// Objective specs and traces
// ---------------------------------------------------------------------------

inline json objective_to_json(const ObjectiveSpec& o) {
    json j{{"kind", to_string(o.kind)}};
    if (o.kind == ObjectiveKind::weighted) {
        j["weight_time"] = o.weight_time;
        j["norm_time"] = o.norm_time ? json(*o.norm_time) : json(nullptr);
        j["norm_cost"] = o.norm_cost ? json(*o.norm_cost) : json(nullptr);
    }
    if (o.kind == ObjectiveKind::hierarchical) {
        j["primary"] = to_string(o.primary);
        j["theta"] = o.theta;
    }
    return j;
}

inline ObjectiveSpec objective_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "time") return ObjectiveSpec::time();
    if (kind == "cost") return ObjectiveSpec::cost();
    if (kind == "weighted") {
        std::optional<double> bt, bc;
        if (j.contains("norm_time") && !j.at("norm_time").is_null()) {
            bt = j.at("norm_time").get<double>();
        }
        if (j.contains("norm_cost") && !j.at("norm_cost").is_null()) {
            bc = j.at("norm_cost").get<double>();
        }
        return ObjectiveSpec::weighted(j.at("weight_time").get<double>(), bt, bc);
    }
    if (kind == "hierarchical") {
        const std::string primary = j.at("primary").get<std::string>();
        return ObjectiveSpec::hierarchical(
            primary == "cost" ? ObjectiveKind::cost : ObjectiveKind::time,
            j.at("theta").get<double>());
    }
    throw FileError("unknown objective kind: " + kind);
}

inline json config_to_json(const ResourceConfig& c) {
    return json{{"cpu_share", c.cpu_share}, {"memory_mb", c.memory_mb}, {"family", c.family}};
}

inline ResourceConfig config_from_json(const json& j) {
    return {j.at("cpu_share").get<double>(), j.at("memory_mb").get<int>(),
            j.at("family").get<std::string>()};
}

inline json run_result_to_json(const RunResult& r) {
    json j{{"status", to_string(r.status)}};
    if (r.ok()) {
        j["duration_ms"] = r.duration_ms;
        j["peak_mem_mb"] = r.peak_mem_mb;
    }
    return j;
}

inline RunResult run_result_from_json(const json& j) {
    const std::string status = j.at("status").get<std::string>();
    if (status == "ok") {
        return RunResult::success(j.at("duration_ms").get<double>(),
                                  j.at("peak_mem_mb").get<double>());
    }
    if (status == "oom") return RunResult::out_of_memory();
    if (status == "timeout") return RunResult::timed_out();
    throw FileError("unknown run status: " + status);
}

/// One JSON line per trial, preceded by a header record.
inline std::string trace_to_jsonl(const OptimizationTrace& t) {
    std::ostringstream out;
    out << json{{"record", "header"},
                {"seed", t.seed},
                {"method", t.method},
                {"objective", objective_to_json(t.objective)},
                {"space", space_to_json(t.initial_space)},
                {"final_floor_mb", t.final_space.memory_floor_mb}}
               .dump()
        << '\n';
    for (const TrialRecord& trial : t.trials) {
        json j{{"record", "trial"},
               {"index", trial.index},
               {"config", config_to_json(trial.config)},
               {"result", run_result_to_json(trial.result)},
               {"objective", trial.objective ? json(*trial.objective) : json(nullptr)},
               {"best_so_far", trial.best_so_far ? json(*trial.best_so_far) : json(nullptr)}};
        if (trial.sliced_floor_mb) j["sliced_floor_mb"] = *trial.sliced_floor_mb;
        out << j.dump() << '\n';
    }
    return out.str();
}

inline OptimizationTrace trace_from_jsonl(const std::string& text,
                                          const std::string& origin = "trace") {
    std::istringstream in(text);
    std::string line;
    OptimizationTrace t;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = detail::parse_json(line, origin);
        const std::string record = j.at("record").get<std::string>();
        if (record == "header") {
            t.seed = j.at("seed").get<std::uint64_t>();
            t.method = j.at("method").get<std::string>();
            t.objective = objective_from_json(j.at("objective"));
            t.initial_space = space_from_json(j.at("space"));
            t.final_space = t.initial_space;
            t.final_space.memory_floor_mb = j.at("final_floor_mb").get<int>();
            header_seen = true;
        } else if (record == "trial") {
            TrialRecord trial;
            trial.index = j.at("index").get<int>();
            trial.config = config_from_json(j.at("config"));
            trial.result = run_result_from_json(j.at("result"));
            if (!j.at("objective").is_null()) trial.objective = j.at("objective").get<double>();
            if (!j.at("best_so_far").is_null()) {
                trial.best_so_far = j.at("best_so_far").get<double>();
            }
            if (j.contains("sliced_floor_mb")) {
                trial.sliced_floor_mb = j.at("sliced_floor_mb").get<int>();
            }
            t.trials.push_back(std::move(trial));
        } else {
            throw FileError(origin + ": unknown record type '" + record + "'");
        }
    }
    if (!header_seen) throw FileError(origin + ": missing header record");
    return t;
}

// ---------------------------------------------------------------------------
// Model dump/load: (spec, training set); refit on load.
// ---------------------------------------------------------------------------

inline json surrogate_to_json(const Surrogate& model) {
    return json{{"kind", to_string(model.kind())},
                {"rng_seed", model.spec().rng_seed},
                {"ensemble_size", model.spec().ensemble_size},
                {"max_depth", model.spec().max_depth},
                {"learning_rate", model.spec().learning_rate},
                {"gp_restarts", model.spec().gp_restarts},
                {"inputs", model.training_inputs()},
                {"values", model.training_values()}};
}

inline std::unique_ptr<Surrogate> surrogate_from_json(const json& j) {
    SurrogateSpec spec;
    spec.kind = surrogate_kind_from_string(j.at("kind").get<std::string>());
    spec.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    spec.ensemble_size = j.value("ensemble_size", spec.ensemble_size);
    spec.max_depth = j.value("max_depth", spec.max_depth);
    spec.learning_rate = j.value("learning_rate", spec.learning_rate);
    spec.gp_restarts = j.value("gp_restarts", spec.gp_restarts);
    return fit_surrogate(spec, j.at("inputs").get<std::vector<EncodedConfig>>(),
                         j.at("values").get<std::vector<double>>());
}

// ---------------------------------------------------------------------------
// Pareto fronts (CSV rows for plotting)
// ---------------------------------------------------------------------------

inline std::string front_points_to_csv(const std::vector<FrontPoint>& points) {
    std::ostringstream out;
    out << "family,cpu_share,memory_mb,time_ms,cost\n";
    for (const FrontPoint& p : points) {
        out << p.config.family << ',' << detail::format_double(p.config.cpu_share) << ','
            << p.config.memory_mb << ',' << detail::format_double(p.time_ms) << ','
            << detail::format_double(p.cost) << '\n';
    }
    return out.str();
}

} // namespace faastune
