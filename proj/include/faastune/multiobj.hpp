#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "faastune/bench.hpp"
#include "faastune/core.hpp"
#include "faastune/optimize.hpp"
#include "faastune/pricing.hpp"
#include "faastune/space.hpp"
#include "faastune/surrogate.hpp"

namespace faastune {

/// Point estimate of one config under both objectives.
struct FrontPoint {
    ResourceConfig config;
    double time_ms = 0.0;
    double cost = 0.0;
};

/// Mutually non-dominated set, sorted by time ascending. The normalization
/// constants record the per-objective bests the values were scaled against.
struct ParetoFront {
    std::vector<FrontPoint> points;
    double norm_time = 1.0;
    double norm_cost = 1.0;
};

/// p dominates q when p is no worse in both objectives and strictly better
/// in at least one. Equal points do not dominate each other.
inline bool dominates(const FrontPoint& p, const FrontPoint& q) {
    return p.time_ms <= q.time_ms && p.cost <= q.cost &&
           (p.time_ms < q.time_ms || p.cost < q.cost);
}

/// Exact non-dominated subset via a sort-and-sweep; duplicates of the same
/// config are collapsed, distinct configs with equal values are all kept.
inline ParetoFront pareto_front(std::vector<FrontPoint> points) {
    if (points.empty()) throw InvalidArgumentError("pareto front of no points");
    for (const FrontPoint& p : points) {
        if (!std::isfinite(p.time_ms) || !std::isfinite(p.cost)) {
            throw InvalidArgumentError("pareto front requires finite values");
        }
    }
    std::sort(points.begin(), points.end(), [](const FrontPoint& a, const FrontPoint& b) {
        if (a.time_ms != b.time_ms) return a.time_ms < b.time_ms;
        if (a.cost != b.cost) return a.cost < b.cost;
        return a.config < b.config;
    });
    points.erase(std::unique(points.begin(), points.end(),
                             [](const FrontPoint& a, const FrontPoint& b) {
                                 return a.config == b.config && a.time_ms == b.time_ms &&
                                        a.cost == b.cost;
                             }),
                 points.end());

    ParetoFront front;
    double min_cost_before = std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    while (i < points.size()) {
        std::size_t j = i;
        double group_min_cost = std::numeric_limits<double>::infinity();
        while (j < points.size() && points[j].time_ms == points[i].time_ms) {
            group_min_cost = std::min(group_min_cost, points[j].cost);
            ++j;
        }
        for (std::size_t k = i; k < j; ++k) {
            if (points[k].cost == group_min_cost && points[k].cost < min_cost_before) {
                front.points.push_back(points[k]);
            }
        }
        min_cost_before = std::min(min_cost_before, group_min_cost);
        i = j;
    }
    front.norm_time = front.points.front().time_ms;
    front.norm_cost = front.points.front().cost;
    for (const FrontPoint& p : front.points) {
        front.norm_time = std::min(front.norm_time, p.time_ms);
        front.norm_cost = std::min(front.norm_cost, p.cost);
    }
    return front;
}

/// Per-config predictor for one objective.
using ConfigPredictor = std::function<double(const ResourceConfig&)>;

/// Adapts a fitted surrogate to a config predictor over a space.
inline ConfigPredictor predictor_from_model(const Surrogate& model, const SearchSpace& space) {
    return [&model, space](const ResourceConfig& c) { return model.predict(encode(c, space)).mean; };
}

/// Predicts both objectives for every non-sliced config, normalizes by the
/// best values from the source optimization runs, and keeps the non-dominated
/// set. Points carry the raw (unnormalized) predictions.
inline ParetoFront predicted_front(const ConfigPredictor& predict_time,
                                   const ConfigPredictor& predict_cost, const SearchSpace& space,
                                   double best_time, double best_cost) {
    if (best_time <= 0.0 || best_cost <= 0.0) {
        throw InvalidArgumentError("normalization constants must be > 0");
    }
    std::vector<FrontPoint> scaled;
    for (const ResourceConfig& c : enumerate(space)) {
        scaled.push_back({c, predict_time(c) / best_time, predict_cost(c) / best_cost});
    }
    ParetoFront front = pareto_front(std::move(scaled));
    for (FrontPoint& p : front.points) {
        p.time_ms *= best_time;
        p.cost *= best_cost;
    }
    front.norm_time = best_time;
    front.norm_cost = best_cost;
    return front;
}

struct MemberDistance {
    ResourceConfig config;
    ResourceConfig nearest; // the closest actual-front config
    double d_time = 0.0;    // |t - t_nearest| / t_nearest
    double d_cost = 0.0;
};

struct ParetoDistance {
    std::vector<MemberDistance> members;
    double avg_d_time = 0.0;
    double avg_d_cost = 0.0;
};

/// Distance of each predicted-front member to the nearest actual-front
/// config. `predicted_measured` must carry the *measured* objectives of the
/// predicted configs. Nearest is by Euclidean distance in the actual front's
/// normalized plane; ties go to the smaller-time neighbor.
inline ParetoDistance pareto_distance(const std::vector<FrontPoint>& predicted_measured,
                                      const ParetoFront& actual) {
    if (predicted_measured.empty() || actual.points.empty()) {
        throw InvalidArgumentError("pareto distance of empty fronts");
    }
    ParetoDistance out;
    for (const FrontPoint& p : predicted_measured) {
        const FrontPoint* nearest = nullptr;
        double nearest_d2 = 0.0;
        for (const FrontPoint& a : actual.points) {
            const double dt = p.time_ms / actual.norm_time - a.time_ms / actual.norm_time;
            const double dc = p.cost / actual.norm_cost - a.cost / actual.norm_cost;
            const double d2 = dt * dt + dc * dc;
            if (nearest == nullptr || d2 < nearest_d2 ||
                (d2 == nearest_d2 && a.time_ms < nearest->time_ms)) {
                nearest = &a;
                nearest_d2 = d2;
            }
        }
        MemberDistance m;
        m.config = p.config;
        m.nearest = nearest->config;
        m.d_time = std::abs(p.time_ms - nearest->time_ms) / nearest->time_ms;
        m.d_cost = std::abs(p.cost - nearest->cost) / nearest->cost;
        out.avg_d_time += m.d_time;
        out.avg_d_cost += m.d_cost;
        out.members.push_back(std::move(m));
    }
    out.avg_d_time /= static_cast<double>(out.members.size());
    out.avg_d_cost /= static_cast<double>(out.members.size());
    return out;
}

// ---------------------------------------------------------------------------
// Weighted multi-objective portfolio
// ---------------------------------------------------------------------------

struct PortfolioEntry {
    double weight_time = 0.0;
    ResourceConfig config;
    double time_ms = 0.0; // measured at the recommending trial
    double cost = 0.0;
};

struct WeightedPortfolio {
    double norm_time = 0.0; // B_t from the time-objective run
    double norm_cost = 0.0; // B_c from the cost-objective run
    std::vector<PortfolioEntry> entries; // W_t in {0, 0.25, 0.5, 0.75, 1}
    std::vector<OptimizationTrace> traces;
};

namespace detail {

/// Measured (time, cost) of the best trial of a finished run.
inline PortfolioEntry entry_from_trace(const OptimizationTrace& trace, double weight_time,
                                       const PricingTable& pricing, bool use_spot,
                                       double timeout_ms) {
    const std::optional<ResourceConfig> best = trace.best_config();
    if (!best) throw Error("optimization run produced no successful trial");
    PortfolioEntry e;
    e.weight_time = weight_time;
    e.config = *best;
    for (const TrialRecord& t : trace.trials) {
        if (t.config == *best && t.objective) {
            const double duration = t.result.ok() ? t.result.duration_ms : timeout_ms;
            e.time_ms = duration;
            const bool charge_peak =
                trace.initial_space.strategy.kind == StrategyKind::fixed_cpu && t.result.ok();
            const double charged_mem =
                charge_peak ? t.result.peak_mem_mb : static_cast<double>(t.config.memory_mb);
            e.cost = execution_cost(t.config.cpu_share, charged_mem, t.config.family, duration,
                                    pricing, use_spot);
            break;
        }
    }
    return e;
}

} // namespace detail

/// The five-recommendation interface: single-objective time and cost runs fix
/// the normalizers, then weighted runs with W_t in {0.25, 0.5, 0.75}. The
/// endpoints W_t = 1 / W_t = 0 reuse the single-objective recommendations.
inline WeightedPortfolio weighted_portfolio(const Evaluator& evaluate, const SearchSpace& space,
                                            const PricingTable& pricing, const Method& method,
                                            const RunSettings& settings, std::uint64_t seed,
                                            bool use_spot = false) {
    WeightedPortfolio portfolio;

    const TrialObjective time_objective =
        make_trial_objective(ObjectiveSpec::time(), space, &pricing, use_spot, settings.timeout_ms);
    OptimizationTrace time_trace =
        run_method(evaluate, space, time_objective, method, settings, split_seed(seed, 1));
    const TrialObjective cost_objective =
        make_trial_objective(ObjectiveSpec::cost(), space, &pricing, use_spot, settings.timeout_ms);
    OptimizationTrace cost_trace =
        run_method(evaluate, space, cost_objective, method, settings, split_seed(seed, 2));

    if (!time_trace.best_value() || !cost_trace.best_value()) {
        throw Error("single-objective runs found no successful configuration");
    }
    portfolio.norm_time = *time_trace.best_value();
    portfolio.norm_cost = *cost_trace.best_value();

    portfolio.entries.push_back(detail::entry_from_trace(cost_trace, 0.0, pricing, use_spot,
                                                         settings.timeout_ms));
    for (double wt : {0.25, 0.5, 0.75}) {
        const TrialObjective weighted = make_trial_objective(
            ObjectiveSpec::weighted(wt, portfolio.norm_time, portfolio.norm_cost), space, &pricing,
            use_spot, settings.timeout_ms);
        OptimizationTrace trace = run_method(evaluate, space, weighted, method, settings,
                                             split_seed(seed, 3 + static_cast<std::uint64_t>(wt * 4)));
        portfolio.entries.push_back(
            detail::entry_from_trace(trace, wt, pricing, use_spot, settings.timeout_ms));
        portfolio.traces.push_back(std::move(trace));
    }
    portfolio.entries.push_back(detail::entry_from_trace(time_trace, 1.0, pricing, use_spot,
                                                         settings.timeout_ms));
    portfolio.traces.push_back(std::move(time_trace));
    portfolio.traces.push_back(std::move(cost_trace));

    std::sort(portfolio.entries.begin(), portfolio.entries.end(),
              [](const PortfolioEntry& a, const PortfolioEntry& b) {
                  return a.weight_time < b.weight_time;
              });
    return portfolio;
}

// ---------------------------------------------------------------------------
// Hierarchical multi-objective optimization
// ---------------------------------------------------------------------------

struct HierarchicalResult {
    ResourceConfig config;
    double predicted_primary = 0.0;
    double predicted_secondary = 0.0;
    double primary_cap = 0.0; // (1 + theta) * best_primary
};

/// Among non-sliced configs whose predicted primary objective stays within
/// (1 + theta) of the best-found primary value, picks the one minimizing the
/// predicted secondary objective. The best-found config is always feasible.
inline HierarchicalResult hierarchical_optimize(const ConfigPredictor& predict_primary,
                                                const ConfigPredictor& predict_secondary,
                                                const SearchSpace& space, double theta,
                                                double best_primary,
                                                const ResourceConfig& best_config) {
    if (theta < 0.0) throw InvalidArgumentError("theta must be >= 0");
    if (best_primary <= 0.0) throw InvalidArgumentError("best primary value must be > 0");

    HierarchicalResult result;
    result.primary_cap = (1.0 + theta) * best_primary;

    bool found = false;
    for (const ResourceConfig& c : enumerate(space)) {
        const double primary = predict_primary(c);
        if (primary > result.primary_cap && !(c == best_config)) continue;
        const double secondary = predict_secondary(c);
        if (!found || secondary < result.predicted_secondary) {
            found = true;
            result.config = c;
            result.predicted_primary = primary;
            result.predicted_secondary = secondary;
        }
    }
    if (!found) {
        // The incumbent sits outside the enumeration (e.g. sliced later);
        // fall back to it directly.
        result.config = best_config;
        result.predicted_primary = predict_primary(best_config);
        result.predicted_secondary = predict_secondary(best_config);
    }
    return result;
}

} // namespace faastune
