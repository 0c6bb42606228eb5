#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "faastune/bench.hpp"
#include "faastune/provider.hpp"

using namespace faastune;

namespace {

PricingTable flat_pricing(const std::vector<std::string>& families) {
    // One shared rate pair: per-config costs differ only via cpu/memory.
    std::vector<InstancePriceRecord> records;
    int i = 0;
    for (const std::string& f : families) {
        records.push_back({f, 1 + (i % 2), 2.0 * (1 + (i % 2)), 0.04 * (1 + (i % 2)), "cpu", "mem", {}});
        ++i;
    }
    return solve_pricing(records);
}

SearchSpace small_space(std::vector<std::string> families) {
    SearchSpace s;
    s.cpu_axis = {1.0, 2.0};
    s.mem_axis = {512, 1024};
    s.family_axis = std::move(families);
    return s;
}

/// Grid where every family's duration is base * multiplier(family).
GridDataset uniform_grid(const SearchSpace& space,
                         const std::map<std::string, double>& family_ms) {
    GridDataset grid(space);
    for (const ResourceConfig& c : enumerate(space)) {
        const double d = family_ms.at(c.family) / c.cpu_share;
        grid.add("f", "default", c, RunResult::success(d, 256.0));
    }
    return grid;
}

} // namespace

TEST_CASE("identical families are all alternates", "[provider]") {
    const SearchSpace space = small_space({"a", "b", "c", "d", "e", "f"});
    const GridDataset grid = uniform_grid(
        space, {{"a", 1000}, {"b", 1000}, {"c", 1000}, {"d", 1000}, {"e", 1000}, {"f", 1000}});
    const TrialObjective objective(ObjectiveSpec::time());
    REQUIRE(count_alternates(grid, "f", "default", objective, 0.10) == 5);
    REQUIRE(count_alternates(grid, "f", "default", objective, 0.0) == 5); // exact ties count
}

TEST_CASE("a clearly dominant family has no alternates", "[provider]") {
    const SearchSpace space = small_space({"fast", "s1", "s2", "s3", "s4", "s5"});
    const GridDataset grid = uniform_grid(
        space,
        {{"fast", 1000}, {"s1", 2000}, {"s2", 2000}, {"s3", 2000}, {"s4", 2000}, {"s5", 2000}});
    const TrialObjective objective(ObjectiveSpec::time());
    REQUIRE(count_alternates(grid, "f", "default", objective, 0.10) == 0);
    REQUIRE(count_alternates(grid, "f", "default", objective, 1e9) == 5); // unbounded threshold
}

TEST_CASE("threshold arithmetic on a two-family grid", "[provider]") {
    const SearchSpace space = small_space({"a", "b"});
    const GridDataset grid = uniform_grid(space, {{"a", 1000}, {"b", 1150}}); // +15%
    const TrialObjective objective(ObjectiveSpec::time());
    REQUIRE(count_alternates(grid, "f", "default", objective, 0.20) == 1);
    REQUIRE(count_alternates(grid, "f", "default", objective, 0.10) == 0);
}

TEST_CASE("family-best tracks both actual and predicted argmins", "[provider]") {
    const SearchSpace space = small_space({"a", "b"});
    const GridDataset grid = uniform_grid(space, {{"a", 1000}, {"b", 1300}});
    const TrialObjective objective(ObjectiveSpec::time());
    auto oracle = [&](const ResourceConfig& c) {
        return (c.family == "a" ? 1000.0 : 1300.0) / c.cpu_share;
    };
    const auto rows = family_best(oracle, space, grid, "f", "default", objective);
    REQUIRE(rows.size() == 2);
    for (const FamilyBest& fb : rows) {
        REQUIRE(fb.actual_best.cpu_share == 2.0);
        REQUIRE(fb.predicted_best == fb.actual_best);
        REQUIRE(fb.actual_of_predicted.has_value());
        REQUIRE(*fb.actual_of_predicted == Catch::Approx(fb.predicted_value));
    }
}

TEST_CASE("oracle substitution picks the cheapest capped idle family", "[provider]") {
    const SearchSpace space = small_space({"busy", "idle1", "idle2"});
    // idle1 is 5% slower (within the 10% cap), idle2 is 30% slower (outside).
    const GridDataset grid =
        uniform_grid(space, {{"busy", 1000}, {"idle1", 1050}, {"idle2", 1300}});
    const PricingTable pricing = flat_pricing(space.family_axis);
    auto oracle = [&](const ResourceConfig& c) {
        const double base = c.family == "busy" ? 1000.0 : c.family == "idle1" ? 1050.0 : 1300.0;
        return base / c.cpu_share;
    };
    const ResourceConfig best_config{2.0, 512, "busy"};
    const double best_time = 500.0;

    const SubstitutionReport report =
        substitute(oracle, space, grid, "f", "default", pricing, {{"idle1", 0.2}, {"idle2", 0.2}},
                   0.10, best_config, best_time);

    REQUIRE(report.substituted);
    REQUIRE(report.chosen_family == "idle1");
    REQUIRE(report.time_ratio <= 1.10 + 1e-12); // the cap holds under the oracle
    REQUIRE(report.time_ratio == Catch::Approx(1.05));

    // Cost ratio = discount x (that family's cost ratio at its chosen config).
    const double chosen_cost = execution_cost(report.chosen_config, 525.0, pricing);
    const double best_cost = execution_cost(best_config, 500.0, pricing);
    REQUIRE(report.cost_ratio == Catch::Approx(0.2 * chosen_cost / best_cost));
}

TEST_CASE("no idle families means no substitution", "[provider]") {
    const SearchSpace space = small_space({"busy", "other"});
    const GridDataset grid = uniform_grid(space, {{"busy", 1000}, {"other", 1010}});
    const PricingTable pricing = flat_pricing(space.family_axis);
    auto oracle = [&](const ResourceConfig& c) {
        return (c.family == "busy" ? 1000.0 : 1010.0) / c.cpu_share;
    };
    const ResourceConfig best_config{2.0, 512, "busy"};
    const SubstitutionReport report =
        substitute(oracle, space, grid, "f", "default", pricing, {}, 0.10, best_config, 500.0);
    REQUIRE_FALSE(report.substituted);
    REQUIRE(report.chosen_config == best_config);
    REQUIRE(report.time_ratio == 1.0);
    REQUIRE(report.cost_ratio == 1.0);
}

TEST_CASE("idle families outside the cap fall back to the incumbent", "[provider]") {
    const SearchSpace space = small_space({"busy", "slow"});
    const GridDataset grid = uniform_grid(space, {{"busy", 1000}, {"slow", 2000}});
    const PricingTable pricing = flat_pricing(space.family_axis);
    auto oracle = [&](const ResourceConfig& c) {
        return (c.family == "busy" ? 1000.0 : 2000.0) / c.cpu_share;
    };
    const ResourceConfig best_config{2.0, 512, "busy"};
    const SubstitutionReport report = substitute(oracle, space, grid, "f", "default", pricing,
                                                 {{"slow", 0.2}}, 0.10, best_config, 500.0);
    REQUIRE_FALSE(report.substituted);
    REQUIRE(report.chosen_config == best_config);
}

TEST_CASE("a discount too weak to beat the incumbent is not taken", "[provider]") {
    const SearchSpace space = small_space({"busy", "idle"});
    const GridDataset grid = uniform_grid(space, {{"busy", 1000}, {"idle", 1050}});
    const PricingTable pricing = flat_pricing(space.family_axis);
    auto oracle = [&](const ResourceConfig& c) {
        return (c.family == "busy" ? 1000.0 : 1050.0) / c.cpu_share;
    };
    const ResourceConfig best_config{2.0, 512, "busy"};
    // Multiplier 1.0: the idle config costs more than the incumbent (slower,
    // same rates), so the provider stays put.
    const SubstitutionReport report = substitute(oracle, space, grid, "f", "default", pricing,
                                                 {{"idle", 1.0}}, 0.10, best_config, 500.0);
    REQUIRE_FALSE(report.substituted);
}

TEST_CASE("discount scales the reported cost linearly", "[provider]") {
    const SearchSpace space = small_space({"busy", "idle"});
    const GridDataset grid = uniform_grid(space, {{"busy", 1000}, {"idle", 1050}});
    const PricingTable pricing = flat_pricing(space.family_axis);
    auto oracle = [&](const ResourceConfig& c) {
        return (c.family == "busy" ? 1000.0 : 1050.0) / c.cpu_share;
    };
    const ResourceConfig best_config{2.0, 512, "busy"};

    const SubstitutionReport at_02 = substitute(oracle, space, grid, "f", "default", pricing,
                                                {{"idle", 0.2}}, 0.10, best_config, 500.0);
    const SubstitutionReport at_04 = substitute(oracle, space, grid, "f", "default", pricing,
                                                {{"idle", 0.4}}, 0.10, best_config, 500.0);
    REQUIRE(at_02.substituted);
    REQUIRE(at_04.substituted);
    REQUIRE(at_02.chosen_config == at_04.chosen_config);
    REQUIRE(at_04.cost_ratio == Catch::Approx(2.0 * at_02.cost_ratio));
}

TEST_CASE("substitution validates its inputs", "[provider]") {
    const SearchSpace space = small_space({"a", "b"});
    const GridDataset grid = uniform_grid(space, {{"a", 1000}, {"b", 1100}});
    const PricingTable pricing = flat_pricing(space.family_axis);
    auto oracle = [](const ResourceConfig&) { return 1000.0; };
    const ResourceConfig best{2.0, 512, "a"};
    REQUIRE_THROWS_AS(substitute(oracle, space, grid, "f", "default", pricing, {{"zz", 0.2}}, 0.1,
                                 best, 500.0),
                      UnknownFamilyError);
    REQUIRE_THROWS_AS(substitute(oracle, space, grid, "f", "default", pricing, {{"b", 0.0}}, 0.1,
                                 best, 500.0),
                      InvalidArgumentError);
    REQUIRE_THROWS_AS(substitute(oracle, space, grid, "f", "default", pricing, {}, 0.0, best,
                                 500.0),
                      InvalidArgumentError);
}
