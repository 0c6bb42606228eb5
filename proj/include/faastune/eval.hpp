#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "faastune/bench.hpp"
#include "faastune/core.hpp"
#include "faastune/optimize.hpp"
#include "faastune/provider.hpp"
#include "faastune/space.hpp"
#include "faastune/stats.hpp"

namespace faastune {

// ---------------------------------------------------------------------------
// Strategy gap: how much each allocation strategy gives up against the full
// decoupled space.
// ---------------------------------------------------------------------------

struct StrategyGapRow {
    Strategy strategy;
    double time_ratio = 1.0; // best ET in subspace / best ET decoupled
    double cost_ratio = 1.0; // best EC likewise
};

/// Brute-force best execution time and cost inside each strategy subspace,
/// normalized by the decoupled optimum; always >= 1. The first three
/// strategies pin the nominated family (default "m5" when present).
inline std::vector<StrategyGapRow> strategy_gap(const GridDataset& grid,
                                                const std::string& function_id,
                                                const std::string& input_id,
                                                const PricingTable& pricing,
                                                std::string nominated_family = {}) {
    const SearchSpace& base = grid.space();
    if (nominated_family.empty()) {
        nominated_family = base.has_family("m5") ? "m5" : base.family_axis.front();
    }
    const std::vector<Strategy> strategies = {
        Strategy::fixed_cpu(nominated_family),
        Strategy::prop_cpu(nominated_family),
        Strategy::decoupled_single_family(nominated_family),
        Strategy::decoupled(),
    };

    auto best_in = [&](const Strategy& strategy, const ObjectiveSpec& objective) {
        SearchSpace sub = base;
        sub.strategy = strategy;
        const TrialObjective trial = make_trial_objective(objective, sub, &pricing);
        std::optional<double> best;
        for (const ResourceConfig& c : enumerate(sub)) {
            if (!grid.contains(function_id, input_id, c)) continue;
            const RunResult agg = aggregate(grid.at(function_id, input_id, c));
            if (const std::optional<double> v = trial.value(c, agg)) {
                if (!best || *v < *best) best = v;
            }
        }
        if (!best) {
            throw MissingKeyError("strategy subspace has no evaluable configs: " +
                                  strategy_label(strategy));
        }
        return *best;
    };

    const double decoupled_time = best_in(Strategy::decoupled(), ObjectiveSpec::time());
    const double decoupled_cost = best_in(Strategy::decoupled(), ObjectiveSpec::cost());

    std::vector<StrategyGapRow> rows;
    for (const Strategy& s : strategies) {
        StrategyGapRow row;
        row.strategy = s;
        row.time_ratio = best_in(s, ObjectiveSpec::time()) / decoupled_time;
        row.cost_ratio = best_in(s, ObjectiveSpec::cost()) / decoupled_cost;
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Online-safety violations
// ---------------------------------------------------------------------------

/// Number of trials at or above `factor` times the grid-best objective.
/// Failed trials (no objective value) always count.
inline int violations(const OptimizationTrace& trace, double grid_best_value,
                      double factor = 1.5) {
    if (grid_best_value <= 0.0) throw InvalidArgumentError("grid best must be > 0");
    int count = 0;
    for (const TrialRecord& t : trace.trials) {
        if (!t.objective || *t.objective >= factor * grid_best_value) ++count;
    }
    return count;
}

// ---------------------------------------------------------------------------
// Prediction error
// ---------------------------------------------------------------------------

/// Mean absolute percentage error of the predictor over every non-failed
/// config of the grid.
inline double mape_all(const ConfigPredictor& predict, const GridDataset& grid,
                       const std::string& function_id, const std::string& input_id,
                       const TrialObjective& objective) {
    const auto values = grid_objective_values(grid, function_id, input_id, objective);
    double total = 0.0;
    for (const auto& [config, actual] : values) {
        total += std::abs(actual - predict(config)) / actual * 100.0;
    }
    return total / static_cast<double>(values.size());
}

/// MAPE restricted to the model's predicted-best config of each family.
inline double mape_family_best(const ConfigPredictor& predict, const SearchSpace& space,
                               const GridDataset& grid, const std::string& function_id,
                               const std::string& input_id, const TrialObjective& objective) {
    const auto values = grid_objective_values(grid, function_id, input_id, objective);
    double total = 0.0;
    int count = 0;
    for (const std::string& family : space.family_axis) {
        // Predicted best among the family's configs with measurable actuals.
        std::optional<double> best_pred;
        double actual_at_best = 0.0;
        for (const auto& [config, actual] : values) {
            if (config.family != family) continue;
            const double p = predict(config);
            if (!best_pred || p < *best_pred) {
                best_pred = p;
                actual_at_best = actual;
            }
        }
        if (!best_pred) continue;
        total += std::abs(actual_at_best - *best_pred) / actual_at_best * 100.0;
        ++count;
    }
    if (count == 0) throw MissingKeyError("no family has an evaluable config");
    return total / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// Generic vs input-specific optimization
// ---------------------------------------------------------------------------

struct InputGapRow {
    std::string input_id;
    double ideal_value = 0.0;                 // grid optimum for this input
    std::optional<double> generic_ratio;      // generic recommendation / ideal
    std::optional<double> specific_ratio;     // input-specific recommendation / ideal
};

/// Compares a single generic optimization (trained on `generic_input`)
/// against per-input optimizations, each evaluated on its own input's grid.
/// A recommendation that fails on an input reports no ratio.
inline std::vector<InputGapRow> input_model_gap(const GridDataset& grid,
                                                const std::string& function_id,
                                                const std::string& generic_input,
                                                const Method& method,
                                                const TrialObjective& objective,
                                                const RunSettings& settings, std::uint64_t seed) {
    const std::vector<std::string> inputs = grid.input_ids(function_id);
    if (inputs.size() < 2) {
        throw InvalidArgumentError("input comparison needs at least two recorded inputs");
    }
    SearchSpace space = grid.space();
    space.strategy = Strategy::decoupled();

    const Evaluator generic_eval = make_replay_evaluator(grid, function_id, generic_input);
    const OptimizationTrace generic_trace =
        run_method(generic_eval, space, objective, method, settings, seed);
    const std::optional<ResourceConfig> generic_config = generic_trace.best_config();

    auto value_on_input = [&](const ResourceConfig& c,
                              const std::string& input) -> std::optional<double> {
        if (!grid.contains(function_id, input, c)) return std::nullopt;
        return objective.value(c, aggregate(grid.at(function_id, input, c)));
    };

    std::vector<InputGapRow> rows;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const std::string& input = inputs[i];
        InputGapRow row;
        row.input_id = input;
        row.ideal_value = grid_best(grid, function_id, input, objective).second;

        if (generic_config) {
            if (const auto v = value_on_input(*generic_config, input)) {
                row.generic_ratio = *v / row.ideal_value;
            }
        }
        const Evaluator specific_eval = make_replay_evaluator(grid, function_id, input);
        const OptimizationTrace specific_trace = run_method(
            specific_eval, space, objective, method, settings, split_seed(seed, i + 1));
        if (const std::optional<ResourceConfig> specific = specific_trace.best_config()) {
            if (const auto v = value_on_input(*specific, input)) {
                row.specific_ratio = *v / row.ideal_value;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Convergence over seeds
// ---------------------------------------------------------------------------

struct ConvergencePoint {
    int trial = 0;
    double mean = 0.0;
    double lo = 0.0; // 95% percentile-bootstrap band of the mean
    double hi = 0.0;
    int seeds_with_value = 0;
};

/// Per-trial best-so-far across repeated runs, with a bootstrap confidence
/// band over seeds. Trials where a seed has no successful observation yet are
/// excluded from that trial's sample.
inline std::vector<ConvergencePoint> convergence_band(const std::vector<OptimizationTrace>& traces,
                                                      std::uint64_t bootstrap_seed = 0x5eed,
                                                      int n_resamples = 1000) {
    if (traces.empty()) throw InvalidArgumentError("no traces");
    std::size_t budget = 0;
    for (const OptimizationTrace& t : traces) budget = std::max(budget, t.trials.size());

    std::vector<ConvergencePoint> series;
    for (std::size_t trial = 0; trial < budget; ++trial) {
        std::vector<double> values;
        for (const OptimizationTrace& t : traces) {
            if (trial < t.trials.size() && t.trials[trial].best_so_far) {
                values.push_back(*t.trials[trial].best_so_far);
            } else if (trial >= t.trials.size() && !t.trials.empty() &&
                       t.trials.back().best_so_far) {
                values.push_back(*t.trials.back().best_so_far);
            }
        }
        ConvergencePoint p;
        p.trial = static_cast<int>(trial);
        p.seeds_with_value = static_cast<int>(values.size());
        if (!values.empty()) {
            const ConfidenceInterval ci =
                bootstrap_mean_ci(values, split_seed(bootstrap_seed, trial), n_resamples);
            p.mean = ci.point;
            p.lo = ci.lo;
            p.hi = ci.hi;
        }
        series.push_back(p);
    }
    return series;
}

} // namespace faastune
