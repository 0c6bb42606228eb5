#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "faastune/bench.hpp"
#include "faastune/multiobj.hpp"
#include "faastune/optimize.hpp"
#include "faastune/pricing.hpp"
#include "faastune/rng.hpp"

using namespace faastune;

namespace {

PricingTable test_pricing() {
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

SyntheticFunctionSpec trade_off_function() {
    SyntheticFunctionSpec s;
    s.name = "tradeoff";
    s.serial_ms = 2000.0;
    s.parallel_ms = 8000.0;
    s.parallel_cap = 2.0;
    s.required_mem_mb = 640;
    s.family_speed = {{"c6g", 0.88}, {"m6g", 0.95}, {"c5", 0.8},
                      {"m5", 1.0},   {"c5a", 0.9},  {"m5a", 1.05}};
    s.noise_cv = 0.0;
    return s;
}

/// Ground-truth (time, cost) per evaluable config.
std::vector<FrontPoint> truth_points(const SyntheticFunctionSpec& fn, const SearchSpace& space,
                                     const PricingTable& pricing) {
    std::vector<FrontPoint> out;
    for (const ResourceConfig& c : enumerate(space)) {
        if (c.memory_mb < fn.required_mem_mb) continue;
        const double t = synth_true_duration(fn, "default", c);
        out.push_back({c, t, execution_cost(c, t, pricing)});
    }
    return out;
}

std::vector<FrontPoint> brute_force_front(const std::vector<FrontPoint>& points) {
    std::vector<FrontPoint> front;
    for (const FrontPoint& p : points) {
        bool dominated = false;
        for (const FrontPoint& q : points) {
            if (dominates(q, p)) {
                dominated = true;
                break;
            }
        }
        if (!dominated) front.push_back(p);
    }
    std::sort(front.begin(), front.end(), [](const FrontPoint& a, const FrontPoint& b) {
        if (a.time_ms != b.time_ms) return a.time_ms < b.time_ms;
        if (a.cost != b.cost) return a.cost < b.cost;
        return a.config < b.config;
    });
    front.erase(std::unique(front.begin(), front.end(),
                            [](const FrontPoint& a, const FrontPoint& b) {
                                return a.config == b.config && a.time_ms == b.time_ms &&
                                       a.cost == b.cost;
                            }),
                front.end());
    return front;
}

ResourceConfig cfg(int i) { return {0.25 * (1 + i % 8), 128 << (i % 4), "f" + std::to_string(i)}; }

} // namespace

TEST_CASE("pareto front by inspection", "[multiobj]") {
    const std::vector<FrontPoint> points = {
        {cfg(0), 1.0, 3.0}, {cfg(1), 2.0, 2.0}, {cfg(2), 3.0, 1.0}, {cfg(3), 3.0, 3.0}};
    const ParetoFront front = pareto_front(points);
    REQUIRE(front.points.size() == 3);
    REQUIRE(front.points[0].time_ms == 1.0);
    REQUIRE(front.points[1].time_ms == 2.0);
    REQUIRE(front.points[2].cost == 1.0);
    REQUIRE(front.norm_time == 1.0);
    REQUIRE(front.norm_cost == 1.0);
}

TEST_CASE("single points and ties survive the front", "[multiobj]") {
    const ParetoFront single = pareto_front({{cfg(0), 5.0, 7.0}});
    REQUIRE(single.points.size() == 1);

    // Two distinct configs with identical values: neither dominates.
    const ParetoFront twins = pareto_front({{cfg(0), 5.0, 7.0}, {cfg(1), 5.0, 7.0}});
    REQUIRE(twins.points.size() == 2);

    // The same config listed twice is deduplicated.
    const ParetoFront dup = pareto_front({{cfg(0), 5.0, 7.0}, {cfg(0), 5.0, 7.0}});
    REQUIRE(dup.points.size() == 1);
}

TEST_CASE("front equals the quadratic dominance filter on random sets", "[multiobj]") {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<FrontPoint> points;
        const std::size_t n = 1 + rng.uniform_below(300);
        for (std::size_t i = 0; i < n; ++i) {
            points.push_back({cfg(static_cast<int>(i)),
                              std::floor(rng.uniform(1.0, 20.0)),
                              std::floor(rng.uniform(1.0, 20.0))});
        }
        const ParetoFront fast = pareto_front(points);
        const std::vector<FrontPoint> slow = brute_force_front(points);
        REQUIRE(fast.points.size() == slow.size());
        for (std::size_t i = 0; i < slow.size(); ++i) {
            REQUIRE(fast.points[i].config == slow[i].config);
            REQUIRE(fast.points[i].time_ms == slow[i].time_ms);
            REQUIRE(fast.points[i].cost == slow[i].cost);
        }
    }
}

TEST_CASE("oracle predictors reproduce the actual front exactly", "[multiobj]") {
    const SyntheticFunctionSpec fn = trade_off_function();
    const SearchSpace space = SearchSpace::default_space();
    const PricingTable pricing = test_pricing();
    const std::vector<FrontPoint> truth = truth_points(fn, space, pricing);
    const ParetoFront actual = pareto_front(truth);

    SearchSpace sliceable = space;
    sliceable.memory_floor_mb = 512; // evaluable region only
    auto time_of = [&](const ResourceConfig& c) { return synth_true_duration(fn, "default", c); };
    auto cost_of = [&](const ResourceConfig& c) {
        return execution_cost(c, synth_true_duration(fn, "default", c), pricing);
    };
    const ParetoFront predicted =
        predicted_front(time_of, cost_of, sliceable, actual.norm_time, actual.norm_cost);

    REQUIRE(predicted.points.size() == actual.points.size());
    for (std::size_t i = 0; i < actual.points.size(); ++i) {
        REQUIRE(predicted.points[i].config == actual.points[i].config);
        REQUIRE(predicted.points[i].time_ms == Catch::Approx(actual.points[i].time_ms));
        REQUIRE(predicted.points[i].cost == Catch::Approx(actual.points[i].cost));
    }

    const ParetoDistance distance = pareto_distance(predicted.points, actual);
    REQUIRE(distance.avg_d_time == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(distance.avg_d_cost == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("a constant-cost predictor degenerates to the fastest config", "[multiobj]") {
    const SyntheticFunctionSpec fn = trade_off_function();
    SearchSpace space = SearchSpace::default_space();
    space.memory_floor_mb = 512;
    auto time_of = [&](const ResourceConfig& c) { return synth_true_duration(fn, "default", c); };
    auto flat_cost = [](const ResourceConfig&) { return 5.0; };
    const ParetoFront front = predicted_front(time_of, flat_cost, space, 1000.0, 5.0);
    REQUIRE(front.points.size() == 1);

    double best_time = std::numeric_limits<double>::infinity();
    for (const ResourceConfig& c : enumerate(space)) best_time = std::min(best_time, time_of(c));
    REQUIRE(front.points[0].time_ms == Catch::Approx(best_time));
}

TEST_CASE("front members are mutually non-dominated with learned models", "[multiobj]") {
    const SyntheticFunctionSpec fn = trade_off_function();
    const PricingTable pricing = test_pricing();
    SearchSpace space = SearchSpace::default_space();
    const Evaluator eval = make_synthetic_evaluator(fn, "default");

    const TrialObjective time_obj(ObjectiveSpec::time());
    const OptimizationTrace time_trace =
        run_bo(eval, space, time_obj, SurrogateKind::gp, {.budget = 15, .n_init = 3}, 3);
    const TrialObjective cost_obj = make_trial_objective(ObjectiveSpec::cost(), space, &pricing);
    const OptimizationTrace cost_trace =
        run_bo(eval, space, cost_obj, SurrogateKind::gp, {.budget = 15, .n_init = 3}, 4);

    const auto time_model = model_from_trace(time_trace);
    const auto cost_model = model_from_trace(cost_trace);
    const SearchSpace final_space = time_trace.final_space;
    const ParetoFront front = predicted_front(
        predictor_from_model(*time_model, final_space), predictor_from_model(*cost_model, final_space),
        final_space, *time_trace.best_value(), *cost_trace.best_value());

    REQUIRE(front.points.size() >= 1);
    REQUIRE(front.points.size() <= enumerate(final_space).size());
    for (const FrontPoint& p : front.points) {
        for (const FrontPoint& q : front.points) REQUIRE(!dominates(p, q));
    }
}

TEST_CASE("pareto distance arithmetic and tie-breaking", "[multiobj]") {
    ParetoFront actual;
    actual.points = {{cfg(0), 100.0, 10.0}, {cfg(1), 200.0, 5.0}};
    actual.norm_time = 100.0;
    actual.norm_cost = 5.0;

    // A predicted member measuring (120, 10): nearest actual is (100, 10).
    const ParetoDistance d = pareto_distance({{cfg(9), 120.0, 10.0}}, actual);
    REQUIRE(d.members.size() == 1);
    REQUIRE(d.members[0].d_time == Catch::Approx(0.2));
    REQUIRE(d.members[0].d_cost == Catch::Approx(0.0));

    // Equidistant neighbors resolve toward the smaller time.
    ParetoFront sym;
    sym.points = {{cfg(0), 90.0, 10.0}, {cfg(1), 110.0, 10.0}};
    sym.norm_time = 90.0;
    sym.norm_cost = 10.0;
    const ParetoDistance tie = pareto_distance({{cfg(9), 100.0, 10.0}}, sym);
    REQUIRE(tie.members[0].nearest == cfg(0));
}

TEST_CASE("exhaustive weighted portfolio equals the brute-force argmin", "[multiobj]") {
    const SyntheticFunctionSpec fn = trade_off_function();
    const PricingTable pricing = test_pricing();
    SearchSpace space = SearchSpace::default_space();
    space.memory_floor_mb = 512; // keep the run failure-free so it can be exhaustive
    const Evaluator eval = make_synthetic_evaluator(fn, "default");

    const std::size_t budget = enumerate(space).size();
    const WeightedPortfolio portfolio = weighted_portfolio(
        eval, space, pricing, Method::random(), {.budget = budget, .n_init = 3}, 12);

    REQUIRE(portfolio.entries.size() == 5);
    const std::vector<FrontPoint> truth = truth_points(fn, space, pricing);

    double best_time = std::numeric_limits<double>::infinity();
    double best_cost = std::numeric_limits<double>::infinity();
    for (const FrontPoint& p : truth) {
        best_time = std::min(best_time, p.time_ms);
        best_cost = std::min(best_cost, p.cost);
    }
    REQUIRE(portfolio.norm_time == Catch::Approx(best_time));
    REQUIRE(portfolio.norm_cost == Catch::Approx(best_cost));

    for (const PortfolioEntry& entry : portfolio.entries) {
        const ObjectiveSpec objective =
            entry.weight_time == 0.0   ? ObjectiveSpec::cost()
            : entry.weight_time == 1.0 ? ObjectiveSpec::time()
                                       : ObjectiveSpec::weighted(entry.weight_time, best_time,
                                                                 best_cost);
        const FrontPoint* argmin = nullptr;
        for (const FrontPoint& p : truth) {
            if (!argmin || objective_value(objective, p.time_ms, p.cost) <
                               objective_value(objective, argmin->time_ms, argmin->cost)) {
                argmin = &p;
            }
        }
        REQUIRE(entry.config == argmin->config);
    }

    // Weight-1 equals the time-optimal run's best; monotone endpoints.
    REQUIRE(portfolio.entries.back().weight_time == 1.0);
    REQUIRE(portfolio.entries.back().time_ms <= portfolio.entries.front().time_ms);
}

TEST_CASE("flat costs collapse weighted recommendations onto the time optimum", "[multiobj]") {
    // Duration inversely proportional to the config's hourly rate makes every
    // config cost the same, so any positive time weight prefers pure speed.
    const PricingTable pricing = test_pricing();
    SearchSpace space = SearchSpace::default_space();
    space.memory_floor_mb = 1024;
    const Evaluator eval = [&pricing](const ResourceConfig& c, std::uint64_t) {
        const double per_hour = execution_cost(c, 3'600'000.0, pricing);
        return RunResult::success(1000.0 / per_hour, static_cast<double>(c.memory_mb));
    };

    const std::size_t budget = enumerate(space).size();
    const WeightedPortfolio portfolio = weighted_portfolio(
        eval, space, pricing, Method::random(), {.budget = budget, .n_init = 3}, 5);

    const ResourceConfig time_best = portfolio.entries.back().config; // W_t = 1
    for (const PortfolioEntry& e : portfolio.entries) {
        if (e.weight_time > 0.0) REQUIRE(e.config == time_best);
    }
}

TEST_CASE("hierarchical optimization on a three-point example", "[multiobj]") {
    SearchSpace space;
    space.cpu_axis = {1.0};
    space.mem_axis = {128, 256, 512};
    space.family_axis = {"m5"};
    auto primary = [](const ResourceConfig& c) {
        return c.memory_mb == 128 ? 100.0 : c.memory_mb == 256 ? 115.0 : 150.0;
    };
    auto secondary = [](const ResourceConfig& c) {
        return c.memory_mb == 128 ? 10.0 : c.memory_mb == 256 ? 6.0 : 3.0;
    };
    const ResourceConfig best{1.0, 128, "m5"};

    const HierarchicalResult r =
        hierarchical_optimize(primary, secondary, space, 0.20, 100.0, best);
    REQUIRE(r.config.memory_mb == 256); // feasible {A, B}; B has lower cost
    REQUIRE(r.predicted_primary == 115.0);
    REQUIRE(r.predicted_secondary == 6.0);

    // theta = 0 keeps the primary-best config itself.
    const HierarchicalResult zero =
        hierarchical_optimize(primary, secondary, space, 0.0, 100.0, best);
    REQUIRE(zero.config == best);
}

TEST_CASE("oracle hierarchical results respect the degradation budget", "[multiobj]") {
    const SyntheticFunctionSpec fn = trade_off_function();
    const PricingTable pricing = test_pricing();
    SearchSpace space = SearchSpace::default_space();
    space.memory_floor_mb = 512;
    auto time_of = [&](const ResourceConfig& c) { return synth_true_duration(fn, "default", c); };
    auto cost_of = [&](const ResourceConfig& c) {
        return execution_cost(c, time_of(c), pricing);
    };

    double best_time = std::numeric_limits<double>::infinity();
    ResourceConfig best_config;
    for (const ResourceConfig& c : enumerate(space)) {
        if (time_of(c) < best_time) {
            best_time = time_of(c);
            best_config = c;
        }
    }

    const double theta = 0.20;
    const HierarchicalResult r =
        hierarchical_optimize(time_of, cost_of, space, theta, best_time, best_config);
    REQUIRE(time_of(r.config) <= (1.0 + theta) * best_time);

    // Equals the brute-force constrained minimum.
    double expected_cost = std::numeric_limits<double>::infinity();
    for (const ResourceConfig& c : enumerate(space)) {
        if (time_of(c) <= (1.0 + theta) * best_time) {
            expected_cost = std::min(expected_cost, cost_of(c));
        }
    }
    REQUIRE(cost_of(r.config) == Catch::Approx(expected_cost));

    // The feasible set always contains the primary-best config.
    const HierarchicalResult tiny =
        hierarchical_optimize(time_of, cost_of, space, 1e-12, best_time, best_config);
    REQUIRE(time_of(tiny.config) <= best_time * (1.0 + 1e-9));
}

TEST_CASE("learned-model hierarchical degradation is reported, not hidden", "[multiobj]") {
    const SyntheticFunctionSpec fn = trade_off_function();
    const PricingTable pricing = test_pricing();
    const SearchSpace space = SearchSpace::default_space();
    const Evaluator eval = make_synthetic_evaluator(fn, "default");
    const TrialObjective time_obj(ObjectiveSpec::time());

    const OptimizationTrace trace =
        run_bo(eval, space, time_obj, SurrogateKind::gp, {.budget = 12, .n_init = 3}, 6);
    const auto model = model_from_trace(trace);
    const SearchSpace final_space = trace.final_space;
    const ConfigPredictor predicted_time = predictor_from_model(*model, final_space);
    const ConfigPredictor derived_cost = [&](const ResourceConfig& c) {
        return execution_cost(c, predicted_time(c), pricing);
    };

    const HierarchicalResult r = hierarchical_optimize(
        predicted_time, derived_cost, final_space, 0.2, *trace.best_value(),
        *trace.best_config());
    // With a learned model the measured degradation may exceed theta; the
    // harness just measures it.
    const double actual = synth_true_duration(fn, "default", r.config);
    REQUIRE(std::isfinite(actual));
    REQUIRE(actual > 0.0);
}
