#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "faastune/bench.hpp"
#include "faastune/eval.hpp"
#include "faastune/io.hpp"

using namespace faastune;

namespace {

PricingTable default_pricing() {
    return solve_pricing({
        {"c6g", 2, 4.0, 0.068, "cpu_c6g", "mem_arm", {}},
        {"m6g", 2, 8.0, 0.077, "cpu_m6g", "mem_arm", {}},
        {"r6g", 2, 16.0, 0.1008, "cpu_m6g", "mem_arm", {}},
        {"c5", 2, 4.0, 0.085, "cpu_c5", "mem_x86", {}},
        {"m5", 2, 8.0, 0.096, "cpu_m5", "mem_x86", {}},
        {"r5", 2, 16.0, 0.126, "cpu_m5", "mem_x86", {}},
        {"c5a", 2, 4.0, 0.077, "cpu_c5a", "mem_amd", {}},
        {"m5a", 2, 8.0, 0.086, "cpu_m5a", "mem_amd", {}},
        {"r5a", 2, 16.0, 0.113, "cpu_m5a", "mem_amd", {}},
    });
}

SyntheticFunctionSpec parallel_function() {
    SyntheticFunctionSpec s;
    s.name = "parallel";
    s.serial_ms = 2000.0;
    s.parallel_ms = 8000.0;
    s.parallel_cap = 2.0;
    s.required_mem_mb = 128;
    s.noise_cv = 0.0;
    return s;
}

OptimizationTrace trace_with_values(const std::vector<std::optional<double>>& values) {
    OptimizationTrace t;
    t.initial_space = SearchSpace::default_space();
    t.final_space = t.initial_space;
    std::optional<double> best;
    int i = 0;
    for (const auto& v : values) {
        TrialRecord r;
        r.index = i++;
        r.config = {1.0, 1024, "m5"};
        r.result = v ? RunResult::success(*v, 100.0) : RunResult::out_of_memory();
        r.objective = v;
        if (v && (!best || *v < *best)) best = v;
        r.best_so_far = best;
        t.trials.push_back(std::move(r));
    }
    return t;
}

} // namespace

TEST_CASE("decoupled strategy gap is exactly one", "[eval]") {
    const SyntheticFunctionSpec fn = parallel_function();
    const SearchSpace space = SearchSpace::default_space();
    const GridDataset grid = materialize_grid(fn, space, {"default"}, 1, 1);
    const auto rows = strategy_gap(grid, fn.name, "default", default_pricing());

    REQUIRE(rows.size() == 4);
    for (const StrategyGapRow& row : rows) {
        REQUIRE(row.time_ratio >= 1.0);
        REQUIRE(row.cost_ratio >= 1.0);
        if (row.strategy.kind == StrategyKind::decoupled) {
            REQUIRE(row.time_ratio == 1.0);
            REQUIRE(row.cost_ratio == 1.0);
        }
    }
}

TEST_CASE("fixed-CPU forfeits the parallel speedup", "[eval]") {
    // One family and uniform speed: the fixed-CPU gap is the analytic ratio
    // (T_s + T_p) / (T_s + T_p/2) = 10000/6000.
    SyntheticFunctionSpec fn = parallel_function();
    SearchSpace space = SearchSpace::default_space();
    space.family_axis = {"m5"};
    const GridDataset grid = materialize_grid(fn, space, {"default"}, 1, 1);
    const auto rows = strategy_gap(grid, fn.name, "default", default_pricing(), "m5");

    const auto fixed = std::find_if(rows.begin(), rows.end(), [](const StrategyGapRow& r) {
        return r.strategy.kind == StrategyKind::fixed_cpu;
    });
    REQUIRE(fixed != rows.end());
    REQUIRE(fixed->time_ratio == Catch::Approx(10000.0 / 6000.0).epsilon(1e-9));
}

TEST_CASE("violations use an inclusive threshold", "[eval]") {
    const OptimizationTrace t = trace_with_values({100.0, 149.0, 150.0, 400.0});
    REQUIRE(violations(t, 100.0) == 2); // 150 and 400; 149 is below 1.5x

    const OptimizationTrace optimal = trace_with_values({100.0, 100.0, 100.0});
    REQUIRE(violations(optimal, 100.0) == 0);

    const OptimizationTrace with_oom = trace_with_values({100.0, std::nullopt, 120.0});
    REQUIRE(violations(with_oom, 100.0) == 1); // the failure counts

    REQUIRE_THROWS_AS(violations(t, 0.0), InvalidArgumentError);
}

TEST_CASE("violations are invariant under trial permutations", "[eval]") {
    std::vector<std::optional<double>> values = {100.0, 151.0, 149.0, 400.0, std::nullopt};
    const int expected = violations(trace_with_values(values), 100.0);
    std::sort(values.begin(), values.end());
    do {
        REQUIRE(violations(trace_with_values(values), 100.0) == expected);
    } while (std::next_permutation(values.begin(), values.end()));
}

TEST_CASE("oracle and uniformly scaled models have closed-form MAPE", "[eval]") {
    const SyntheticFunctionSpec fn = parallel_function();
    const SearchSpace space = SearchSpace::default_space();
    const GridDataset grid = materialize_grid(fn, space, {"default"}, 1, 1);
    const TrialObjective objective(ObjectiveSpec::time());

    auto oracle = [&](const ResourceConfig& c) { return synth_true_duration(fn, "default", c); };
    REQUIRE(mape_all(oracle, grid, fn.name, "default", objective) ==
            Catch::Approx(0.0).margin(1e-12));

    for (double k : {0.5, 0.9, 1.3}) {
        auto scaled = [&](const ResourceConfig& c) { return k * oracle(c); };
        REQUIRE(mape_all(scaled, grid, fn.name, "default", objective) ==
                Catch::Approx(std::abs(k - 1.0) * 100.0).epsilon(1e-9));
    }
}

TEST_CASE("a full-grid GP interpolates within five percent", "[eval]") {
    SyntheticFunctionSpec fn = parallel_function();
    SearchSpace space = SearchSpace::default_space();
    space.family_axis = {"c5", "m5"}; // 96 configs keeps the fit quick
    const GridDataset grid = materialize_grid(fn, space, {"default"}, 1, 1);
    const TrialObjective objective(ObjectiveSpec::time());

    std::vector<EncodedConfig> inputs;
    std::vector<double> values;
    for (const auto& [config, value] : grid_objective_values(grid, fn.name, "default", objective)) {
        inputs.push_back(encode(config, space));
        values.push_back(value);
    }
    SurrogateSpec spec;
    spec.kind = SurrogateKind::gp;
    spec.rng_seed = 3;
    const auto gp = fit_surrogate(spec, std::move(inputs), std::move(values));
    const double mape =
        mape_all(predictor_from_model(*gp, space), grid, fn.name, "default", objective);
    REQUIRE(mape <= 5.0);
}

TEST_CASE("family-best MAPE on oracle and biased models", "[eval]") {
    const SyntheticFunctionSpec fn = parallel_function();
    const SearchSpace space = SearchSpace::default_space();
    const GridDataset grid = materialize_grid(fn, space, {"default"}, 1, 1);
    const TrialObjective objective(ObjectiveSpec::time());

    auto oracle = [&](const ResourceConfig& c) { return synth_true_duration(fn, "default", c); };
    REQUIRE(mape_family_best(oracle, space, grid, fn.name, "default", objective) ==
            Catch::Approx(0.0).margin(1e-12));

    // Uniform +10% prediction error on the six per-family points.
    auto biased = [&](const ResourceConfig& c) { return 1.1 * oracle(c); };
    REQUIRE(mape_family_best(biased, space, grid, fn.name, "default", objective) ==
            Catch::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("single-family spaces reduce to one-point MAPE", "[eval]") {
    SyntheticFunctionSpec fn = parallel_function();
    SearchSpace space = SearchSpace::default_space();
    space.family_axis = {"m5"};
    const GridDataset grid = materialize_grid(fn, space, {"default"}, 1, 1);
    const TrialObjective objective(ObjectiveSpec::time());
    auto off_by_20 = [&](const ResourceConfig& c) {
        return 1.2 * synth_true_duration(fn, "default", c);
    };
    REQUIRE(mape_family_best(off_by_20, space, grid, fn.name, "default", objective) ==
            Catch::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("identical inputs give identical generic and specific recommendations", "[eval]") {
    SyntheticFunctionSpec fn = parallel_function();
    fn.input_scale = {{"default", 1.0}, {"alt", 1.0}};
    const SearchSpace space = SearchSpace::default_space();
    const GridDataset grid = materialize_grid(fn, space, {"default", "alt"}, 1, 1);
    const TrialObjective objective(ObjectiveSpec::time());

    const auto rows = input_model_gap(grid, fn.name, "default", Method::random(), objective,
                                      {.budget = 30, .n_init = 3}, 11);
    REQUIRE(rows.size() == 2);
    for (const InputGapRow& row : rows) {
        REQUIRE(row.generic_ratio.has_value());
        REQUIRE(row.specific_ratio.has_value());
        REQUIRE(*row.generic_ratio >= 1.0);
    }
}

TEST_CASE("exhaustive input-specific runs reach the per-input optimum", "[eval]") {
    SyntheticFunctionSpec fn = parallel_function();
    fn.input_scale = {{"default", 1.0}, {"large", 2.0}};
    SearchSpace space = SearchSpace::default_space();
    space.family_axis = {"m5"}; // 48 configs: exhaustive budget is feasible
    const GridDataset grid = materialize_grid(fn, space, {"default", "large"}, 1, 1);
    const TrialObjective objective(ObjectiveSpec::time());

    const auto rows = input_model_gap(grid, fn.name, "default", Method::random(), objective,
                                      {.budget = 48, .n_init = 3}, 2);
    for (const InputGapRow& row : rows) {
        REQUIRE(row.specific_ratio.has_value());
        REQUIRE(*row.specific_ratio == Catch::Approx(1.0));
    }
}

TEST_CASE("different memory cliffs per input open a generic-vs-specific gap", "[eval]") {
    // The same function needs far more memory on the large input; a generic
    // recommendation tuned on the default input can fail outright on it.
    SyntheticFunctionSpec small_input = parallel_function();
    SyntheticFunctionSpec large_input = parallel_function();
    large_input.required_mem_mb = 1500;
    large_input.serial_ms *= 2.0;

    SearchSpace space = SearchSpace::default_space();
    GridDataset grid(space);
    for (const ResourceConfig& c : enumerate(space)) {
        grid.add("f", "default", c, synth_eval(small_input, "default", c, 1));
        grid.add("f", "large", c, synth_eval(large_input, "default", c, 1));
    }
    const TrialObjective objective(ObjectiveSpec::time());
    const auto rows = input_model_gap(grid, "f", "default", Method::random(), objective,
                                      {.budget = 60, .n_init = 3}, 13);

    const auto large_row = std::find_if(rows.begin(), rows.end(), [](const InputGapRow& r) {
        return r.input_id == "large";
    });
    REQUIRE(large_row != rows.end());
    // Either the generic recommendation fails on the large input (no ratio)
    // or it is measurably worse than ideal; the specific run has a ratio.
    if (large_row->generic_ratio) {
        REQUIRE(*large_row->generic_ratio >= 1.0);
    }
    REQUIRE(large_row->specific_ratio.has_value());
}

TEST_CASE("convergence bands are monotone means over seeds", "[eval]") {
    const SyntheticFunctionSpec fn = parallel_function();
    const SearchSpace space = SearchSpace::default_space();
    const Evaluator eval = make_synthetic_evaluator(fn, "default");
    const TrialObjective objective(ObjectiveSpec::time());

    std::vector<OptimizationTrace> traces;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        traces.push_back(
            run_sampling(eval, space, objective, Method::Type::random, {.budget = 12}, seed));
    }
    const auto series = convergence_band(traces);
    REQUIRE(series.size() == 12);
    for (std::size_t i = 0; i + 1 < series.size(); ++i) {
        REQUIRE(series[i + 1].mean <= series[i].mean + 1e-9);
    }
    for (const ConvergencePoint& p : series) {
        REQUIRE(p.lo <= p.mean + 1e-12);
        REQUIRE(p.hi >= p.mean - 1e-12);
        REQUIRE(p.seeds_with_value == 4);
    }
    // Deterministic given the same traces and seed.
    const auto again = convergence_band(traces);
    REQUIRE(again[5].lo == series[5].lo);
    REQUIRE(again[5].hi == series[5].hi);
}
