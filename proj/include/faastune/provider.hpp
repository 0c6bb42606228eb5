#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "faastune/bench.hpp"
#include "faastune/core.hpp"
#include "faastune/multiobj.hpp"
#include "faastune/optimize.hpp"
#include "faastune/pricing.hpp"
#include "faastune/space.hpp"

namespace faastune {

/// Aggregated objective value of every config recorded for one
/// (function, input), in enumeration order. OOM configs are skipped.
inline std::vector<std::pair<ResourceConfig, double>>
grid_objective_values(const GridDataset& grid, const std::string& function_id,
                      const std::string& input_id, const TrialObjective& objective) {
    std::vector<std::pair<ResourceConfig, double>> out;
    SearchSpace full = grid.space();
    full.strategy = Strategy::decoupled();
    for (const ResourceConfig& c : enumerate(full)) {
        if (!grid.contains(function_id, input_id, c)) continue;
        const RunResult agg = aggregate(grid.at(function_id, input_id, c));
        if (const std::optional<double> v = objective.value(c, agg)) {
            out.push_back({c, *v});
        }
    }
    if (out.empty()) {
        throw MissingKeyError("grid holds no evaluable configs for (" + function_id + ", " +
                              input_id + ")");
    }
    return out;
}

/// Ground-truth best config by the given objective.
inline std::pair<ResourceConfig, double> grid_best(const GridDataset& grid,
                                                   const std::string& function_id,
                                                   const std::string& input_id,
                                                   const TrialObjective& objective) {
    const auto values = grid_objective_values(grid, function_id, input_id, objective);
    const auto it = std::min_element(values.begin(), values.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
    return *it;
}

/// How many families other than the best config's own contain at least one
/// config within (1 + theta) of the best objective value.
inline int count_alternates(const GridDataset& grid, const std::string& function_id,
                            const std::string& input_id, const TrialObjective& objective,
                            double theta) {
    if (theta < 0.0) throw InvalidArgumentError("theta must be >= 0");
    const auto values = grid_objective_values(grid, function_id, input_id, objective);
    const auto best = std::min_element(values.begin(), values.end(),
                                       [](const auto& a, const auto& b) { return a.second < b.second; });
    const double cap = (1.0 + theta) * best->second;

    std::vector<std::string> hit;
    for (const auto& [config, value] : values) {
        if (config.family == best->first.family) continue;
        if (value <= cap &&
            std::find(hit.begin(), hit.end(), config.family) == hit.end()) {
            hit.push_back(config.family);
        }
    }
    return static_cast<int>(hit.size());
}

/// Best config of each family by the model's prediction, with the measured
/// objective values beside the predicted ones.
struct FamilyBest {
    std::string family;
    ResourceConfig actual_best;            // grid argmin within the family
    double actual_best_value = 0.0;
    ResourceConfig predicted_best;         // model argmin within the family
    double predicted_value = 0.0;          // model's value at predicted_best
    std::optional<double> actual_of_predicted; // measured value of predicted_best
};

inline std::vector<FamilyBest> family_best(const ConfigPredictor& predict,
                                           const SearchSpace& space, const GridDataset& grid,
                                           const std::string& function_id,
                                           const std::string& input_id,
                                           const TrialObjective& objective) {
    const auto values = grid_objective_values(grid, function_id, input_id, objective);
    std::vector<FamilyBest> out;
    for (const std::string& family : space.family_axis) {
        FamilyBest fb;
        fb.family = family;
        bool any_actual = false;
        for (const auto& [config, value] : values) {
            if (config.family != family) continue;
            if (!any_actual || value < fb.actual_best_value) {
                any_actual = true;
                fb.actual_best = config;
                fb.actual_best_value = value;
            }
        }
        SearchSpace sub = space;
        sub.strategy = Strategy::decoupled_single_family(family);
        bool any_predicted = false;
        for (const ResourceConfig& c : enumerate(sub)) {
            const double p = predict(c);
            if (!any_predicted || p < fb.predicted_value) {
                any_predicted = true;
                fb.predicted_best = c;
                fb.predicted_value = p;
            }
        }
        if (!any_actual || !any_predicted) continue;
        for (const auto& [config, value] : values) {
            if (config == fb.predicted_best) {
                fb.actual_of_predicted = value;
                break;
            }
        }
        out.push_back(std::move(fb));
    }
    return out;
}

/// Outcome of the idle-capacity substitution decision.
struct SubstitutionReport {
    bool substituted = false;     // false: stayed on the best-found config
    std::string chosen_family;
    ResourceConfig chosen_config;
    double predicted_time_ms = 0.0;
    double predicted_cost = 0.0;  // with the idle discount applied
    double actual_time_ms = 0.0;  // measured at the chosen config
    double actual_cost = 0.0;     // measured, with the idle discount applied
    double time_ratio = 1.0;      // actual time / best-found time
    double cost_ratio = 1.0;      // actual discounted cost / best-found cost
    double cap = 0.0;
};

/// Chooses where the provider should run the function: among idle families
/// whose predicted-best config keeps predicted time within (1 + cap) of the
/// best-found time, the one with the lowest spot-discounted cost — or the
/// best-found config itself when that beats every candidate.
inline SubstitutionReport substitute(const ConfigPredictor& predict_time,
                                     const SearchSpace& space, const GridDataset& grid,
                                     const std::string& function_id, const std::string& input_id,
                                     const PricingTable& pricing,
                                     const std::map<std::string, double>& idle_spot,
                                     double cap, const ResourceConfig& best_config,
                                     double best_time_ms) {
    if (cap <= 0.0) throw InvalidArgumentError("cap must be > 0");
    for (const auto& [family, multiplier] : idle_spot) {
        if (multiplier <= 0.0 || multiplier > 1.0) {
            throw InvalidArgumentError("spot multiplier must lie in (0, 1]: " + family);
        }
    }

    const double time_cap = (1.0 + cap) * best_time_ms;

    struct Candidate {
        ResourceConfig config;
        double predicted_time;
        double cost;
    };
    // The incumbent: measured best-found config at its regular price.
    const RunResult best_agg = aggregate(grid.at(function_id, input_id, best_config));
    const double best_actual_time = best_agg.ok() ? best_agg.duration_ms : best_time_ms;
    const double best_actual_cost = execution_cost(best_config, best_actual_time, pricing);
    Candidate chosen{best_config, best_time_ms, best_actual_cost};
    bool substituted = false;

    for (const auto& [family, multiplier] : idle_spot) {
        if (!space.has_family(family)) {
            throw UnknownFamilyError("idle family not on the family axis: " + family);
        }
        SearchSpace sub = space;
        sub.strategy = Strategy::decoupled_single_family(family);
        std::optional<Candidate> family_best_candidate;
        for (const ResourceConfig& c : enumerate(sub)) {
            const double t = predict_time(c);
            if (!family_best_candidate || t < family_best_candidate->predicted_time) {
                family_best_candidate = Candidate{c, t, 0.0};
            }
        }
        if (!family_best_candidate) continue;
        if (family_best_candidate->predicted_time > time_cap) continue;
        family_best_candidate->cost =
            execution_cost(family_best_candidate->config, family_best_candidate->predicted_time,
                           pricing) *
            multiplier;
        if (family_best_candidate->cost < chosen.cost) {
            chosen = *family_best_candidate;
            substituted = true;
        }
    }

    SubstitutionReport report;
    report.substituted = substituted;
    report.chosen_family = chosen.config.family;
    report.chosen_config = chosen.config;
    report.predicted_time_ms = chosen.predicted_time;
    report.predicted_cost = chosen.cost;
    report.cap = cap;

    const RunResult chosen_agg = aggregate(grid.at(function_id, input_id, chosen.config));
    const double discount =
        idle_spot.count(chosen.config.family) && substituted ? idle_spot.at(chosen.config.family)
                                                             : 1.0;
    report.actual_time_ms = chosen_agg.ok() ? chosen_agg.duration_ms : best_time_ms;
    report.actual_cost = execution_cost(chosen.config, report.actual_time_ms, pricing) * discount;
    report.time_ratio = report.actual_time_ms / best_actual_time;
    report.cost_ratio = report.actual_cost / best_actual_cost;
    return report;
}

} // namespace faastune
