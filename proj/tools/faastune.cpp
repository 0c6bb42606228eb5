// faastune command-line interface: resource-allocation tuning for serverless
// functions against recorded or synthetic performance grids.

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "faastune/faastune.hpp"

namespace fs = std::filesystem;
using namespace faastune;

namespace {

// ---------------------------------------------------------------------------
// Shared option blocks
// ---------------------------------------------------------------------------

struct CommonOptions {
    std::string out_dir;
    std::string space_path;
    std::string pricing_path;
    std::string grid_path;
    std::string synthetic_path;
    std::string function_id;
    std::string input_id = "default";
    std::string objective = "time";
    std::string surrogate = "gp";
    std::size_t budget = 20;
    std::size_t n_init = 3;
    std::uint64_t seed = 1;
    int n_seeds = 1;
    double timeout_ms = kDefaultTimeoutMs;
    bool use_spot = false;
};

std::string default_out_dir() {
    const char* env = std::getenv("FAASTUNE_OUT");
    return env != nullptr && *env != '\0' ? env : "out";
}

void add_common_io(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--out", opt.out_dir, "output directory (env FAASTUNE_OUT)")
        ->default_val(default_out_dir());
    cmd->add_option("--space", opt.space_path, "search-space descriptor JSON");
}

void add_source(CLI::App* cmd, CommonOptions& opt, bool required = true) {
    auto* grid = cmd->add_option("--grid", opt.grid_path, "recorded grid CSV");
    auto* synth = cmd->add_option("--synthetic", opt.synthetic_path, "synthetic spec JSON");
    if (required) {
        grid->excludes(synth);
        synth->excludes(grid);
    }
    cmd->add_option("--function", opt.function_id, "function id (defaults to the only one)");
    cmd->add_option("--input", opt.input_id, "input id")->capture_default_str();
}

void add_run_options(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--objective", opt.objective,
                    "time | cost | weighted:W | hier:THETA")
        ->capture_default_str();
    cmd->add_option("--surrogate", opt.surrogate, "gp | rf | et | gbrt | random | lhs")
        ->capture_default_str();
    cmd->add_option("--budget", opt.budget, "trials per run")->capture_default_str();
    cmd->add_option("--n-init", opt.n_init, "random bootstrap trials")->capture_default_str();
    cmd->add_option("--seed", opt.seed, "base seed")->capture_default_str();
    cmd->add_option("--seeds", opt.n_seeds, "number of seeds (seed, seed+1, ...)")
        ->capture_default_str();
    cmd->add_option("--timeout-ms", opt.timeout_ms, "evaluation timeout")->capture_default_str();
    cmd->add_flag("--spot", opt.use_spot, "apply table spot multipliers to costs");
    cmd->add_option("--pricing", opt.pricing_path, "pricing sheet CSV");
}

std::vector<std::uint64_t> seed_list(const CommonOptions& opt) {
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < opt.n_seeds; ++i) seeds.push_back(opt.seed + static_cast<std::uint64_t>(i));
    return seeds;
}

// ---------------------------------------------------------------------------
// Input resolution
// ---------------------------------------------------------------------------

/// Everything a run needs: an evaluator plus full-grid ground truth.
struct Source {
    std::string function_id;
    std::string input_id;
    SearchSpace space;
    Evaluator evaluator;
    std::optional<GridDataset> recorded;  // set for --grid
    std::optional<SyntheticFunctionSpec> synthetic; // set for --synthetic
    std::shared_ptr<GridDataset> truth;   // ground-truth grid (noise-free for synthetic)

    std::vector<std::string> all_function_ids() const {
        if (recorded) return recorded->function_ids();
        return {function_id};
    }
};

SearchSpace resolve_space(const CommonOptions& opt) {
    return opt.space_path.empty() ? SearchSpace::default_space() : load_space(opt.space_path);
}

std::optional<PricingTable> resolve_pricing(const CommonOptions& opt) {
    if (opt.pricing_path.empty()) return std::nullopt;
    return solve_pricing(load_pricing_csv(opt.pricing_path));
}

SyntheticFunctionSpec pick_spec(const std::vector<SyntheticFunctionSpec>& specs,
                                const std::string& name) {
    if (name.empty()) {
        if (specs.size() == 1) return specs[0];
        throw InvalidArgumentError("spec file holds several functions; pass --function");
    }
    for (const auto& s : specs) {
        if (s.name == name) return s;
    }
    throw InvalidArgumentError("no synthetic function named '" + name + "'");
}

Source resolve_source(const CommonOptions& opt) {
    Source src;
    src.space = resolve_space(opt);
    src.input_id = opt.input_id;
    if (!opt.grid_path.empty()) {
        GridDataset grid = load_grid_csv(
            opt.grid_path, opt.space_path.empty() ? std::nullopt : std::optional(src.space));
        if (opt.space_path.empty()) {
            src.space = grid.space();
        }
        const auto functions = grid.function_ids();
        src.function_id = opt.function_id.empty()
                              ? (functions.size() == 1 ? functions[0] : "")
                              : opt.function_id;
        if (src.function_id.empty()) {
            throw InvalidArgumentError("grid holds several functions; pass --function");
        }
        src.truth = std::make_shared<GridDataset>(grid);
        src.recorded = std::move(grid);
        src.evaluator = make_replay_evaluator(*src.truth, src.function_id, src.input_id);
        return src;
    }
    if (!opt.synthetic_path.empty()) {
        const SyntheticFunctionSpec spec =
            pick_spec(load_synthetic_specs(opt.synthetic_path), opt.function_id);
        src.function_id = spec.name;
        src.synthetic = spec;
        src.evaluator = make_synthetic_evaluator(spec, src.input_id);
        SyntheticFunctionSpec noiseless = spec;
        noiseless.noise_cv = 0.0;
        src.truth = std::make_shared<GridDataset>(
            materialize_grid(noiseless, src.space, {src.input_id}, 1, 0));
        return src;
    }
    throw InvalidArgumentError("pass --grid or --synthetic");
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

void write_manifest(const fs::path& out_dir, const std::string& command, json resolved) {
    resolved["command"] = command;
    resolved["written_at"] = static_cast<std::int64_t>(std::time(nullptr));
    write_file((out_dir / "manifest.json").string(), resolved.dump(2) + "\n");
}

json manifest_base(const CommonOptions& opt) {
    return json{{"out", opt.out_dir},
                {"space", opt.space_path},
                {"pricing", opt.pricing_path},
                {"grid", opt.grid_path},
                {"synthetic", opt.synthetic_path},
                {"function", opt.function_id},
                {"input", opt.input_id},
                {"objective", opt.objective},
                {"surrogate", opt.surrogate},
                {"budget", opt.budget},
                {"n_init", opt.n_init},
                {"seeds", seed_list(opt)},
                {"timeout_ms", opt.timeout_ms},
                {"spot", opt.use_spot}};
}

fs::path ensure_out_dir(const CommonOptions& opt) {
    fs::path dir(opt.out_dir);
    fs::create_directories(dir);
    return dir;
}

struct ParsedObjective {
    ObjectiveSpec spec;
    double theta = 0.2;        // hier
    bool hierarchical = false;
};

ParsedObjective parse_objective(const std::string& text) {
    ParsedObjective p;
    if (text == "time") {
        p.spec = ObjectiveSpec::time();
    } else if (text == "cost") {
        p.spec = ObjectiveSpec::cost();
    } else if (text.rfind("weighted:", 0) == 0) {
        p.spec = ObjectiveSpec::weighted(std::stod(text.substr(9)));
    } else if (text.rfind("hier:", 0) == 0) {
        p.hierarchical = true;
        p.theta = std::stod(text.substr(5));
        p.spec = ObjectiveSpec::hierarchical(ObjectiveKind::time, p.theta);
    } else {
        throw InvalidArgumentError("unknown objective: " + text);
    }
    return p;
}

json config_report(const ResourceConfig& c) { return config_to_json(c); }

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

int cmd_solve_pricing(const std::string& csv_path, const CommonOptions& opt) {
    const PricingTable table = solve_pricing(load_pricing_csv(csv_path));
    const json j = pricing_table_to_json(table);
    std::cout << j.dump(2) << "\n";
    const fs::path out = ensure_out_dir(opt);
    write_file((out / "pricing_table.json").string(), j.dump(2) + "\n");
    json manifest = manifest_base(opt);
    manifest["prices_csv"] = csv_path;
    write_manifest(out, "solve-pricing", manifest);
    return 0;
}

int cmd_gen_grid(const CommonOptions& opt, const std::string& inputs_csv, int reps) {
    if (opt.synthetic_path.empty()) throw InvalidArgumentError("gen-grid needs --synthetic");
    const SearchSpace space = resolve_space(opt);
    const SyntheticFunctionSpec spec =
        pick_spec(load_synthetic_specs(opt.synthetic_path), opt.function_id);

    std::vector<std::string> inputs;
    if (inputs_csv.empty()) {
        for (const auto& [input, scale] : spec.input_scale) inputs.push_back(input);
        if (inputs.empty()) inputs.push_back("default");
    } else {
        std::istringstream ss(inputs_csv);
        std::string item;
        while (std::getline(ss, item, ',')) inputs.push_back(item);
    }

    const GridDataset grid = materialize_grid(spec, space, inputs, reps, opt.seed);
    const fs::path out = ensure_out_dir(opt);
    write_file((out / "grid.csv").string(), grid_to_csv(grid));
    json manifest = manifest_base(opt);
    manifest["reps"] = reps;
    manifest["inputs"] = inputs;
    write_manifest(out, "gen-grid", manifest);
    std::cout << "wrote " << (out / "grid.csv").string() << " (" << grid.runs().size()
              << " keys)\n";
    return 0;
}

/// Runs one (seed, objective) optimization, resolving weighted normalizers
/// via prerequisite single-objective runs when needed.
OptimizationTrace run_one(const Source& src, const ObjectiveSpec& objective, const Method& method,
                          const RunSettings& settings, const PricingTable* pricing, bool use_spot,
                          std::uint64_t seed, json* notes) {
    ObjectiveSpec resolved = objective;
    if (objective.kind == ObjectiveKind::weighted &&
        (!objective.norm_time || !objective.norm_cost)) {
        const TrialObjective time_obj = make_trial_objective(ObjectiveSpec::time(), src.space,
                                                             pricing, use_spot,
                                                             settings.timeout_ms);
        const OptimizationTrace time_trace =
            run_method(src.evaluator, src.space, time_obj, method, settings, split_seed(seed, 101));
        const TrialObjective cost_obj = make_trial_objective(ObjectiveSpec::cost(), src.space,
                                                             pricing, use_spot,
                                                             settings.timeout_ms);
        const OptimizationTrace cost_trace =
            run_method(src.evaluator, src.space, cost_obj, method, settings, split_seed(seed, 102));
        if (!time_trace.best_value() || !cost_trace.best_value()) {
            throw Error("prerequisite single-objective runs failed to find any valid config");
        }
        resolved.norm_time = time_trace.best_value();
        resolved.norm_cost = cost_trace.best_value();
        if (notes != nullptr) {
            (*notes)["norm_time"] = *resolved.norm_time;
            (*notes)["norm_cost"] = *resolved.norm_cost;
        }
    }
    const TrialObjective trial =
        make_trial_objective(resolved, src.space, pricing, use_spot, settings.timeout_ms);
    return run_method(src.evaluator, src.space, trial, method, settings, seed);
}

int cmd_optimize(const CommonOptions& opt, const std::string& hier_primary) {
    const Source src = resolve_source(opt);
    const std::optional<PricingTable> pricing = resolve_pricing(opt);
    const ParsedObjective parsed = parse_objective(opt.objective);
    const Method method = Method::from_string(opt.surrogate);
    const RunSettings settings{opt.budget, opt.n_init, opt.timeout_ms};
    const fs::path out = ensure_out_dir(opt);

    const ObjectiveSpec run_objective =
        parsed.hierarchical
            ? (hier_primary == "cost" ? ObjectiveSpec::cost() : ObjectiveSpec::time())
            : parsed.spec;

    json summary = json::array();
    for (const std::uint64_t seed : seed_list(opt)) {
        json notes = json::object();
        const OptimizationTrace trace =
            run_one(src, run_objective, method, settings, pricing ? &*pricing : nullptr,
                    opt.use_spot, seed, &notes);
        const std::string name = "trace_seed" + std::to_string(seed) + ".jsonl";
        write_file((out / name).string(), trace_to_jsonl(trace));

        json entry{{"seed", seed}, {"trace", name}};
        if (trace.best_value()) {
            entry["best_value"] = *trace.best_value();
            entry["best_config"] = config_report(*trace.best_config());
        } else {
            entry["best_value"] = nullptr;
        }
        if (!notes.empty()) entry["weighted"] = notes;

        if (parsed.hierarchical && trace.best_value()) {
            if (!pricing) {
                throw InvalidArgumentError("hierarchical runs need --pricing for the secondary");
            }
            const auto model = model_from_trace(trace);
            const SearchSpace final_space = trace.final_space;
            const ConfigPredictor primary = predictor_from_model(*model, final_space);
            const bool primary_is_time = hier_primary != "cost";
            const ConfigPredictor secondary = [&, primary](const ResourceConfig& c) {
                // The secondary objective derives from the same model: cost is
                // predicted duration priced out, time is cost un-priced.
                const double t = primary_is_time ? primary(c) : 0.0;
                if (primary_is_time) return execution_cost(c, t, *pricing, opt.use_spot);
                const double per_ms = execution_cost(c, 1.0, *pricing, opt.use_spot);
                return primary(c) / per_ms;
            };
            const HierarchicalResult h =
                hierarchical_optimize(primary, secondary, final_space, parsed.theta,
                                      *trace.best_value(), *trace.best_config());
            entry["hierarchical"] = json{{"theta", parsed.theta},
                                         {"config", config_report(h.config)},
                                         {"predicted_primary", h.predicted_primary},
                                         {"predicted_secondary", h.predicted_secondary},
                                         {"primary_cap", h.primary_cap}};
        }
        summary.push_back(std::move(entry));
    }
    write_file((out / "summary.json").string(), summary.dump(2) + "\n");
    write_manifest(out, "optimize", manifest_base(opt));
    std::cout << "wrote " << seed_list(opt).size() << " trace(s) under " << out.string() << "\n";
    return 0;
}

/// Actual (time, cost) of every evaluable config, straight from the truth grid.
std::vector<FrontPoint> actual_points(const Source& src, const PricingTable& pricing,
                                      bool use_spot, double timeout_ms) {
    const TrialObjective time_obj(ObjectiveSpec::time(), nullptr, false, false, timeout_ms);
    std::vector<FrontPoint> points;
    SearchSpace full = src.space;
    full.strategy = Strategy::decoupled();
    for (const ResourceConfig& c : enumerate(full)) {
        if (!src.truth->contains(src.function_id, src.input_id, c)) continue;
        const RunResult agg = aggregate(src.truth->at(src.function_id, src.input_id, c));
        const std::optional<double> t = time_obj.value(c, agg);
        if (!t) continue;
        points.push_back({c, *t, execution_cost(c, *t, pricing, use_spot)});
    }
    return points;
}

int cmd_pareto(const CommonOptions& opt) {
    const Source src = resolve_source(opt);
    const std::optional<PricingTable> pricing = resolve_pricing(opt);
    if (!pricing) throw InvalidArgumentError("pareto needs --pricing");
    const Method method = Method::from_string(opt.surrogate);
    const RunSettings settings{opt.budget, opt.n_init, opt.timeout_ms};
    const fs::path out = ensure_out_dir(opt);

    const TrialObjective time_obj =
        make_trial_objective(ObjectiveSpec::time(), src.space, &*pricing, opt.use_spot,
                             opt.timeout_ms);
    const OptimizationTrace time_trace = run_method(src.evaluator, src.space, time_obj, method,
                                                    settings, split_seed(opt.seed, 1));
    const TrialObjective cost_obj =
        make_trial_objective(ObjectiveSpec::cost(), src.space, &*pricing, opt.use_spot,
                             opt.timeout_ms);
    const OptimizationTrace cost_trace = run_method(src.evaluator, src.space, cost_obj, method,
                                                    settings, split_seed(opt.seed, 2));
    if (!time_trace.best_value() || !cost_trace.best_value()) {
        throw Error("optimization found no valid configuration to anchor the front");
    }

    const auto time_model = model_from_trace(time_trace);
    const auto cost_model = model_from_trace(cost_trace);
    const SearchSpace final_space = time_trace.final_space;
    const ParetoFront predicted = predicted_front(
        predictor_from_model(*time_model, final_space),
        predictor_from_model(*cost_model, final_space), final_space, *time_trace.best_value(),
        *cost_trace.best_value());

    const ParetoFront actual = pareto_front(actual_points(src, *pricing, opt.use_spot,
                                                          opt.timeout_ms));

    // Re-measure the predicted members on the truth grid for the distance.
    std::vector<FrontPoint> measured;
    const TrialObjective plain_time(ObjectiveSpec::time(), nullptr, false, false, opt.timeout_ms);
    for (const FrontPoint& p : predicted.points) {
        if (!src.truth->contains(src.function_id, src.input_id, p.config)) continue;
        const RunResult agg = aggregate(src.truth->at(src.function_id, src.input_id, p.config));
        if (const std::optional<double> t = plain_time.value(p.config, agg)) {
            measured.push_back({p.config, *t, execution_cost(p.config, *t, *pricing, opt.use_spot)});
        }
    }
    json report{{"function", src.function_id},
                {"input", src.input_id},
                {"predicted_size", predicted.points.size()},
                {"actual_size", actual.points.size()}};
    if (!measured.empty()) {
        const ParetoDistance d = pareto_distance(measured, actual);
        report["avg_d_time"] = d.avg_d_time;
        report["avg_d_cost"] = d.avg_d_cost;
        json members = json::array();
        for (const MemberDistance& m : d.members) {
            members.push_back(json{{"config", config_report(m.config)},
                                   {"nearest", config_report(m.nearest)},
                                   {"d_time", m.d_time},
                                   {"d_cost", m.d_cost}});
        }
        report["members"] = std::move(members);
    }
    write_file((out / "pareto.json").string(), report.dump(2) + "\n");
    write_file((out / "predicted_front.csv").string(), front_points_to_csv(predicted.points));
    write_file((out / "actual_front.csv").string(), front_points_to_csv(actual.points));
    write_manifest(out, "pareto", manifest_base(opt));
    std::cout << "predicted front: " << predicted.points.size()
              << " configs, actual: " << actual.points.size() << "\n";
    return 0;
}

int cmd_weighted(const CommonOptions& opt) {
    const Source src = resolve_source(opt);
    const std::optional<PricingTable> pricing = resolve_pricing(opt);
    if (!pricing) throw InvalidArgumentError("weighted needs --pricing");
    const Method method = Method::from_string(opt.surrogate);
    const RunSettings settings{opt.budget, opt.n_init, opt.timeout_ms};
    const fs::path out = ensure_out_dir(opt);

    const WeightedPortfolio portfolio = weighted_portfolio(
        src.evaluator, src.space, *pricing, method, settings, opt.seed, opt.use_spot);

    json entries = json::array();
    std::ostringstream csv;
    csv << "weight_time,family,cpu_share,memory_mb,time_ms,cost\n";
    for (const PortfolioEntry& e : portfolio.entries) {
        entries.push_back(json{{"weight_time", e.weight_time},
                               {"config", config_report(e.config)},
                               {"time_ms", e.time_ms},
                               {"cost", e.cost}});
        csv << e.weight_time << ',' << e.config.family << ',' << e.config.cpu_share << ','
            << e.config.memory_mb << ',' << e.time_ms << ',' << e.cost << '\n';
    }
    const json report{{"function", src.function_id},
                      {"norm_time", portfolio.norm_time},
                      {"norm_cost", portfolio.norm_cost},
                      {"entries", std::move(entries)}};
    write_file((out / "weighted.json").string(), report.dump(2) + "\n");
    write_file((out / "portfolio.csv").string(), csv.str());
    write_manifest(out, "weighted", manifest_base(opt));
    std::cout << "portfolio of " << portfolio.entries.size() << " recommendations written\n";
    return 0;
}

int cmd_hierarchical(const CommonOptions& opt, double theta, const std::string& primary_name) {
    CommonOptions adjusted = opt;
    adjusted.objective = "hier:" + std::to_string(theta);
    return cmd_optimize(adjusted, primary_name);
}

int cmd_provider_sim(const CommonOptions& opt, const std::string& idle_csv, double spot,
                     double cap) {
    const Source base_src = resolve_source(opt);
    const std::optional<PricingTable> pricing = resolve_pricing(opt);
    if (!pricing) throw InvalidArgumentError("provider-sim needs --pricing");
    const Method method = Method::from_string(opt.surrogate);
    const RunSettings settings{opt.budget, opt.n_init, opt.timeout_ms};
    const fs::path out = ensure_out_dir(opt);

    std::map<std::string, double> idle;
    if (!idle_csv.empty()) {
        std::istringstream ss(idle_csv);
        std::string item;
        while (std::getline(ss, item, ',')) idle[item] = spot;
    }

    const std::vector<double> thetas = {0.05, 0.10, 0.20};
    const std::vector<std::pair<std::string, double>> columns = {
        {"time", -1.0}, {"w0.25", 0.25}, {"w0.5", 0.5}, {"w0.75", 0.75}, {"cost", -1.0}};

    std::ostringstream matrix;
    matrix << "function,objective,theta,alternates\n";
    json reports = json::array();

    for (const std::string& function_id : base_src.all_function_ids()) {
        CommonOptions fn_opt = opt;
        fn_opt.function_id = function_id;
        const Source src = resolve_source(fn_opt);

        // Alternate-family counts per objective and threshold.
        for (const auto& [label, weight] : columns) {
            ObjectiveSpec objective = ObjectiveSpec::time();
            if (label == "cost") {
                objective = ObjectiveSpec::cost();
            } else if (weight > 0.0) {
                const TrialObjective to_t = make_trial_objective(
                    ObjectiveSpec::time(), src.space, &*pricing, false, opt.timeout_ms);
                const TrialObjective to_c = make_trial_objective(
                    ObjectiveSpec::cost(), src.space, &*pricing, false, opt.timeout_ms);
                const double bt = grid_best(*src.truth, function_id, src.input_id, to_t).second;
                const double bc = grid_best(*src.truth, function_id, src.input_id, to_c).second;
                objective = ObjectiveSpec::weighted(weight, bt, bc);
            }
            const TrialObjective trial = make_trial_objective(objective, src.space, &*pricing,
                                                              false, opt.timeout_ms);
            for (double theta : thetas) {
                matrix << function_id << ',' << label << ',' << theta << ','
                       << count_alternates(*src.truth, function_id, src.input_id, trial, theta)
                       << '\n';
            }
        }

        // Substitution from the time model of a fresh optimization run.
        const TrialObjective time_obj = make_trial_objective(
            ObjectiveSpec::time(), src.space, &*pricing, false, opt.timeout_ms);
        const OptimizationTrace trace =
            run_method(src.evaluator, src.space, time_obj, method, settings, opt.seed);
        if (!trace.best_value()) continue;
        const auto model = model_from_trace(trace);
        const SubstitutionReport report = substitute(
            predictor_from_model(*model, trace.final_space), trace.final_space, *src.truth,
            function_id, src.input_id, *pricing, idle, cap, *trace.best_config(),
            *trace.best_value());
        reports.push_back(json{{"function", function_id},
                               {"substituted", report.substituted},
                               {"chosen_family", report.chosen_family},
                               {"chosen_config", config_report(report.chosen_config)},
                               {"predicted_time_ms", report.predicted_time_ms},
                               {"predicted_cost", report.predicted_cost},
                               {"actual_time_ms", report.actual_time_ms},
                               {"actual_cost", report.actual_cost},
                               {"time_ratio", report.time_ratio},
                               {"cost_ratio", report.cost_ratio},
                               {"cap", report.cap}});
    }

    write_file((out / "alternates.csv").string(), matrix.str());
    write_file((out / "provider.json").string(), reports.dump(2) + "\n");
    json manifest = manifest_base(opt);
    manifest["idle"] = idle;
    manifest["spot"] = spot;
    manifest["cap"] = cap;
    write_manifest(out, "provider-sim", manifest);
    std::cout << "provider analysis for " << reports.size() << " function(s) written\n";
    return 0;
}

int cmd_evaluate(const CommonOptions& opt, const std::string& methods_csv) {
    const Source base_src = resolve_source(opt);
    const std::optional<PricingTable> pricing = resolve_pricing(opt);
    const fs::path out = ensure_out_dir(opt);

    std::vector<std::string> methods;
    {
        std::istringstream ss(methods_csv);
        std::string item;
        while (std::getline(ss, item, ',')) methods.push_back(item);
    }

    const ParsedObjective parsed = parse_objective(opt.objective);
    json report = json::object();
    std::ostringstream convergence_csv;
    convergence_csv << "function,method,trial,mean,lo,hi\n";
    std::ostringstream violations_csv;
    violations_csv << "function,method,seed,violations\n";
    std::ostringstream mape_csv;
    mape_csv << "function,method,mape_all,mape_family_best\n";
    std::ostringstream gaps_csv;
    gaps_csv << "function,strategy,time_ratio,cost_ratio\n";

    for (const std::string& function_id : base_src.all_function_ids()) {
        CommonOptions fn_opt = opt;
        fn_opt.function_id = function_id;
        const Source src = resolve_source(fn_opt);
        const TrialObjective trial = make_trial_objective(
            parsed.spec, src.space, pricing ? &*pricing : nullptr, opt.use_spot, opt.timeout_ms);
        const double optimum = grid_best(*src.truth, function_id, src.input_id, trial).second;
        json fn_report{{"grid_best", optimum}};

        for (const std::string& method_name : methods) {
            const Method method = Method::from_string(method_name);
            std::vector<OptimizationTrace> traces;
            for (const std::uint64_t seed : seed_list(opt)) {
                traces.push_back(run_method(src.evaluator, src.space, trial, method,
                                            {opt.budget, opt.n_init, opt.timeout_ms}, seed));
            }
            for (const auto& series_point : convergence_band(traces)) {
                convergence_csv << function_id << ',' << method_name << ','
                                << series_point.trial << ',' << series_point.mean / optimum << ','
                                << series_point.lo / optimum << ',' << series_point.hi / optimum
                                << '\n';
            }
            for (const OptimizationTrace& t : traces) {
                violations_csv << function_id << ',' << method_name << ',' << t.seed << ','
                               << violations(t, optimum) << '\n';
            }
            const OptimizationTrace& first = traces.front();
            if (first.best_value()) {
                const auto model = model_from_trace(first);
                const ConfigPredictor predict = predictor_from_model(*model, first.final_space);
                mape_csv << function_id << ',' << method_name << ','
                         << mape_all(predict, *src.truth, function_id, src.input_id, trial) << ','
                         << mape_family_best(predict, first.final_space, *src.truth, function_id,
                                             src.input_id, trial)
                         << '\n';
            }
            json method_report = json::object();
            if (first.best_value()) {
                std::vector<double> normalized;
                for (const OptimizationTrace& t : traces) {
                    if (t.best_value()) normalized.push_back(*t.best_value() / optimum);
                }
                method_report["median_normalized_best"] = median(normalized);
            }
            fn_report[method_name] = std::move(method_report);
        }

        if (pricing) {
            for (const StrategyGapRow& row : strategy_gap(*src.truth, function_id, src.input_id,
                                                          *pricing)) {
                gaps_csv << function_id << ',' << strategy_label(row.strategy) << ','
                         << row.time_ratio << ',' << row.cost_ratio << '\n';
            }
        }
        report[function_id] = std::move(fn_report);
    }

    write_file((out / "metric_report.json").string(), report.dump(2) + "\n");
    write_file((out / "convergence.csv").string(), convergence_csv.str());
    write_file((out / "violations.csv").string(), violations_csv.str());
    write_file((out / "mape.csv").string(), mape_csv.str());
    if (pricing) write_file((out / "strategy_gaps.csv").string(), gaps_csv.str());
    json manifest = manifest_base(opt);
    manifest["methods"] = methods;
    write_manifest(out, "evaluate", manifest);
    std::cout << "metric report written under " << out.string() << "\n";
    return 0;
}

void print_error(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"resource-allocation tuning for serverless functions"};
    app.require_subcommand(1);

    CommonOptions opt;

    // solve-pricing
    std::string prices_csv;
    auto* solve = app.add_subcommand("solve-pricing", "derive per-vCPU/per-GB rates from a sheet");
    solve->add_option("prices", prices_csv, "pricing sheet CSV")->required();
    add_common_io(solve, opt);

    // gen-grid
    std::string gen_inputs;
    int gen_reps = 5;
    auto* gen = app.add_subcommand("gen-grid", "materialize a synthetic performance grid");
    add_common_io(gen, opt);
    gen->add_option("--synthetic", opt.synthetic_path, "synthetic spec JSON")->required();
    gen->add_option("--function", opt.function_id, "function name inside the spec file");
    gen->add_option("--inputs", gen_inputs, "comma-separated input ids (default: spec's)");
    gen->add_option("--reps", gen_reps, "repetitions per config")->capture_default_str();
    gen->add_option("--seed", opt.seed, "base seed")->capture_default_str();

    // optimize
    std::string hier_primary = "time";
    auto* optimize = app.add_subcommand("optimize", "run the optimization loop");
    add_common_io(optimize, opt);
    add_source(optimize, opt);
    add_run_options(optimize, opt);
    optimize->add_option("--primary", hier_primary, "hier objective primary: time | cost");

    // pareto
    auto* pareto = app.add_subcommand("pareto", "predicted vs actual Pareto front");
    add_common_io(pareto, opt);
    add_source(pareto, opt);
    add_run_options(pareto, opt);

    // weighted
    auto* weighted = app.add_subcommand("weighted", "five-point weighted portfolio");
    add_common_io(weighted, opt);
    add_source(weighted, opt);
    add_run_options(weighted, opt);

    // hierarchical
    double theta = 0.20;
    auto* hier = app.add_subcommand("hierarchical", "constrained secondary-objective search");
    add_common_io(hier, opt);
    add_source(hier, opt);
    add_run_options(hier, opt);
    hier->add_option("--theta", theta, "allowed primary degradation")->capture_default_str();
    hier->add_option("--primary", hier_primary, "time | cost")->capture_default_str();

    // provider-sim
    std::string idle_csv;
    double spot = 0.2;
    double cap = 0.10;
    auto* provider = app.add_subcommand("provider-sim", "alternate-family and spot analysis");
    add_common_io(provider, opt);
    add_source(provider, opt);
    add_run_options(provider, opt);
    provider->add_option("--idle", idle_csv, "comma-separated idle families");
    provider->add_option("--spot", spot, "spot multiplier for idle families")
        ->capture_default_str();
    provider->add_option("--cap", cap, "allowed predicted-time degradation")
        ->capture_default_str();

    // evaluate
    std::string methods_csv = "gp,random,lhs";
    auto* evaluate = app.add_subcommand("evaluate", "convergence, violations, MAPE, strategy gaps");
    add_common_io(evaluate, opt);
    add_source(evaluate, opt);
    add_run_options(evaluate, opt);
    evaluate->add_option("--methods", methods_csv, "comma-separated methods to compare")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        print_error("usage", e.what());
        return 2;
    }

    try {
        if (solve->parsed()) return cmd_solve_pricing(prices_csv, opt);
        if (gen->parsed()) return cmd_gen_grid(opt, gen_inputs, gen_reps);
        if (optimize->parsed()) return cmd_optimize(opt, hier_primary);
        if (pareto->parsed()) return cmd_pareto(opt);
        if (weighted->parsed()) return cmd_weighted(opt);
        if (hier->parsed()) return cmd_hierarchical(opt, theta, hier_primary);
        if (provider->parsed()) return cmd_provider_sim(opt, idle_csv, spot, cap);
        if (evaluate->parsed()) return cmd_evaluate(opt, methods_csv);
    } catch (const FileError& e) {
        print_error("file", e.what());
        return 3;
    } catch (const Error& e) {
        print_error("domain", e.what());
        return 4;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 4;
    }
    return 0;
}
