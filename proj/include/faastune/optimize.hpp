#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "faastune/bench.hpp"
#include "faastune/core.hpp"
#include "faastune/pricing.hpp"
#include "faastune/rng.hpp"
#include "faastune/space.hpp"
#include "faastune/stats.hpp"
#include "faastune/surrogate.hpp"

namespace faastune {

enum class ObjectiveKind { time, cost, weighted, hierarchical };

inline std::string to_string(ObjectiveKind k) {
    switch (k) {
    case ObjectiveKind::time: return "time";
    case ObjectiveKind::cost: return "cost";
    case ObjectiveKind::weighted: return "weighted";
    case ObjectiveKind::hierarchical: return "hierarchical";
    }
    return "?";
}

/// What a run optimizes. Weighted objectives need the normalizers B_t, B_c
/// (best values found by prior single-objective runs). Hierarchical runs
/// optimize the primary objective and post-process with the theta budget.
struct ObjectiveSpec {
    ObjectiveKind kind = ObjectiveKind::time;
    double weight_time = 1.0;            // W_t; W_c = 1 - W_t
    std::optional<double> norm_time;     // B_t
    std::optional<double> norm_cost;     // B_c
    ObjectiveKind primary = ObjectiveKind::time; // hierarchical primary role
    double theta = 0.20;                         // allowed primary degradation

    static ObjectiveSpec time() { return {}; }
    static ObjectiveSpec cost() {
        ObjectiveSpec s;
        s.kind = ObjectiveKind::cost;
        return s;
    }
    static ObjectiveSpec weighted(double weight_time, std::optional<double> norm_time = {},
                                  std::optional<double> norm_cost = {}) {
        if (weight_time < 0.0 || weight_time > 1.0) {
            throw InvalidArgumentError("time weight must lie in [0, 1]");
        }
        ObjectiveSpec s;
        s.kind = ObjectiveKind::weighted;
        s.weight_time = weight_time;
        s.norm_time = norm_time;
        s.norm_cost = norm_cost;
        return s;
    }
    static ObjectiveSpec hierarchical(ObjectiveKind primary, double theta) {
        if (primary != ObjectiveKind::time && primary != ObjectiveKind::cost) {
            throw InvalidArgumentError("hierarchical primary must be time or cost");
        }
        if (theta < 0.0) throw InvalidArgumentError("theta must be >= 0");
        ObjectiveSpec s;
        s.kind = ObjectiveKind::hierarchical;
        s.primary = primary;
        s.theta = theta;
        return s;
    }

    friend bool operator==(const ObjectiveSpec&, const ObjectiveSpec&) = default;
};

/// Scalar objective of one observation.
/// time -> duration; cost -> currency; weighted -> W_t*F_t/B_t + W_c*F_c/B_c.
inline double objective_value(const ObjectiveSpec& objective, double duration_ms, double cost) {
    switch (objective.kind) {
    case ObjectiveKind::time:
        return duration_ms;
    case ObjectiveKind::cost:
        return cost;
    case ObjectiveKind::weighted: {
        if (!objective.norm_time || !objective.norm_cost) {
            throw InvalidArgumentError("weighted objective requires both normalizers");
        }
        if (*objective.norm_time <= 0.0 || *objective.norm_cost <= 0.0) {
            throw InvalidArgumentError("normalizers must be > 0");
        }
        const double wt = objective.weight_time;
        return wt * (duration_ms / *objective.norm_time) +
               (1.0 - wt) * (cost / *objective.norm_cost);
    }
    case ObjectiveKind::hierarchical:
        throw InvalidArgumentError(
            "hierarchical objectives have no scalar trial value; optimize the primary objective");
    }
    throw InvalidArgumentError("unhandled objective kind");
}

/// Maps an evaluated run to its trial objective. OOM has no value (the trial
/// is a failure); a timeout is a valid observation worth the timeout duration.
/// Under the fixed-CPU strategy memory is charged by observed peak rather
/// than by the allocated limit.
class TrialObjective {
public:
    TrialObjective(ObjectiveSpec objective, const PricingTable* pricing = nullptr,
                   bool use_spot = false, bool charge_peak_memory = false,
                   double timeout_ms = kDefaultTimeoutMs)
        : objective_(std::move(objective)), pricing_(pricing), use_spot_(use_spot),
          charge_peak_memory_(charge_peak_memory), timeout_ms_(timeout_ms) {
        const bool needs_cost = objective_.kind == ObjectiveKind::cost ||
                                objective_.kind == ObjectiveKind::weighted ||
                                (objective_.kind == ObjectiveKind::hierarchical);
        if (needs_cost && pricing_ == nullptr) {
            throw InvalidArgumentError("objective involves cost but no pricing table was given");
        }
    }

    const ObjectiveSpec& objective() const { return objective_; }
    double timeout_ms() const { return timeout_ms_; }

    std::optional<double> value(const ResourceConfig& config, const RunResult& result) const {
        if (result.status == RunStatus::oom) return std::nullopt;
        const double duration = result.ok() ? result.duration_ms : timeout_ms_;
        double cost = 0.0;
        if (pricing_ != nullptr) {
            const double charged_mem = charge_peak_memory_ && result.ok()
                                           ? result.peak_mem_mb
                                           : static_cast<double>(config.memory_mb);
            cost = execution_cost(config.cpu_share, charged_mem, config.family, duration,
                                  *pricing_, use_spot_);
        }
        if (objective_.kind == ObjectiveKind::hierarchical) {
            return objective_.primary == ObjectiveKind::time ? duration : cost;
        }
        return objective_value(objective_, duration, cost);
    }

private:
    ObjectiveSpec objective_;
    const PricingTable* pricing_;
    bool use_spot_;
    bool charge_peak_memory_;
    double timeout_ms_;
};

inline TrialObjective make_trial_objective(const ObjectiveSpec& objective,
                                           const SearchSpace& space,
                                           const PricingTable* pricing = nullptr,
                                           bool use_spot = false,
                                           double timeout_ms = kDefaultTimeoutMs) {
    const bool fixed_cpu = space.strategy.kind == StrategyKind::fixed_cpu;
    return TrialObjective(objective, pricing, use_spot, fixed_cpu, timeout_ms);
}

// ---------------------------------------------------------------------------
// Experiment designs
// ---------------------------------------------------------------------------

/// n distinct configs drawn uniformly without replacement.
inline std::vector<ResourceConfig> random_design(const SearchSpace& space, std::size_t n,
                                                 std::uint64_t seed) {
    std::vector<ResourceConfig> pool = enumerate(space);
    if (n > pool.size()) {
        throw InvalidArgumentError("design size " + std::to_string(n) + " exceeds space size " +
                                   std::to_string(pool.size()));
    }
    Rng rng(seed);
    // Partial Fisher-Yates: the first n slots end up a uniform sample.
    for (std::size_t i = 0; i < n; ++i) {
        std::swap(pool[i], pool[i + rng.uniform_below(pool.size() - i)]);
    }
    pool.resize(n);
    return pool;
}

/// n stratified samples of [0,1) per column: each column hits every stratum
/// (i/n, (i+1)/n) exactly once, in shuffled order.
inline std::vector<std::vector<double>> lhs_unit(std::size_t n, std::size_t dims, Rng& rng) {
    std::vector<std::vector<double>> samples(n, std::vector<double>(dims));
    std::vector<std::size_t> strata(n);
    for (std::size_t d = 0; d < dims; ++d) {
        std::iota(strata.begin(), strata.end(), 0);
        rng.shuffle(strata);
        for (std::size_t i = 0; i < n; ++i) {
            samples[i][d] =
                (static_cast<double>(strata[i]) + rng.uniform01()) / static_cast<double>(n);
        }
    }
    return samples;
}

namespace detail {

/// Nearest valid untested config by axis-index distance (ties resolved in
/// enumeration order); used to repair LHS duplicates and sliced plan entries.
inline std::optional<ResourceConfig>
snap_to_valid(const ResourceConfig& wanted, const SearchSpace& space,
              const std::set<ResourceConfig>& taken) {
    const std::vector<int> mems = space.valid_memories();
    auto index_in = [](const auto& axis, const auto& value) {
        return static_cast<long>(std::find(axis.begin(), axis.end(), value) - axis.begin());
    };
    const long want_cpu = index_in(space.cpu_axis, wanted.cpu_share);
    const long want_mem = index_in(mems, wanted.memory_mb);
    const long want_fam = index_in(space.family_axis, wanted.family);

    std::optional<ResourceConfig> best;
    long best_distance = 0;
    for (const ResourceConfig& c : enumerate(space)) {
        if (taken.count(c)) continue;
        const long d = std::abs(index_in(space.cpu_axis, c.cpu_share) - want_cpu) +
                       std::abs(index_in(mems, c.memory_mb) - want_mem) +
                       std::abs(index_in(space.family_axis, c.family) - want_fam);
        if (!best || d < best_distance) {
            best = c;
            best_distance = d;
        }
    }
    return best;
}

} // namespace detail

/// Latin hypercube design over the three axes. Memory strata cover only the
/// values above the slice floor; duplicate configs produced by index rounding
/// are snapped to the nearest valid untaken config.
inline std::vector<ResourceConfig> lhs_design(const SearchSpace& space, std::size_t n,
                                              std::uint64_t seed) {
    if (n == 0) throw InvalidArgumentError("design size must be >= 1");
    const std::vector<int> mems = space.valid_memories();
    if (mems.empty()) throw SpaceExhaustedError("no memory values above the slice floor");

    Rng rng(seed);
    const std::vector<std::vector<double>> unit = lhs_unit(n, 3, rng);
    auto pick = [](const auto& axis, double u) {
        std::size_t idx = static_cast<std::size_t>(u * static_cast<double>(axis.size()));
        return axis[std::min(idx, axis.size() - 1)];
    };

    std::vector<ResourceConfig> design;
    std::set<ResourceConfig> taken;
    for (std::size_t i = 0; i < n; ++i) {
        ResourceConfig c{pick(space.cpu_axis, unit[i][0]), pick(mems, unit[i][1]),
                         pick(space.family_axis, unit[i][2])};
        if (taken.count(c)) {
            if (auto snapped = detail::snap_to_valid(c, space, taken)) {
                c = *snapped;
            } // space smaller than n: keep the duplicate
        }
        taken.insert(c);
        design.push_back(std::move(c));
    }
    return design;
}

/// Expected improvement under a Gaussian posterior, minimization convention.
inline double expected_improvement(double mean, double stddev, double best_so_far) {
    if (stddev < 1e-12) return 0.0;
    const double z = (best_so_far - mean) / stddev;
    return (best_so_far - mean) * normal_cdf(z) + stddev * normal_pdf(z);
}

// ---------------------------------------------------------------------------
// Optimization runs
// ---------------------------------------------------------------------------

/// How candidates are proposed: pure sampling or model-guided.
struct Method {
    enum class Type { random, lhs, bo };
    Type type = Type::bo;
    SurrogateKind surrogate = SurrogateKind::gp;

    static Method random() { return {Type::random, SurrogateKind::gp}; }
    static Method lhs() { return {Type::lhs, SurrogateKind::gp}; }
    static Method bo(SurrogateKind kind) { return {Type::bo, kind}; }

    static Method from_string(const std::string& s) {
        if (s == "random") return random();
        if (s == "lhs") return lhs();
        return bo(surrogate_kind_from_string(s));
    }
    std::string label() const {
        switch (type) {
        case Type::random: return "random";
        case Type::lhs: return "lhs";
        case Type::bo: return to_string(surrogate);
        }
        return "?";
    }
};

struct TrialRecord {
    int index = 0;
    ResourceConfig config;
    RunResult result;
    std::optional<double> objective;     // absent for failed (OOM) trials
    std::optional<double> best_so_far;   // absent until a trial succeeds
    std::optional<int> sliced_floor_mb;  // set when this trial triggered slicing
};

struct OptimizationTrace {
    std::uint64_t seed = 0;
    std::string method;
    ObjectiveSpec objective;
    SearchSpace initial_space;
    SearchSpace final_space;
    std::vector<TrialRecord> trials;

    std::optional<double> best_value() const {
        return trials.empty() ? std::nullopt : trials.back().best_so_far;
    }
    std::optional<ResourceConfig> best_config() const {
        std::optional<ResourceConfig> best;
        std::optional<double> value;
        for (const TrialRecord& t : trials) {
            if (t.objective && (!value || *t.objective < *value)) {
                value = t.objective;
                best = t.config;
            }
        }
        return best;
    }
};

struct RunSettings {
    std::size_t budget = 20;
    std::size_t n_init = 3;
    double timeout_ms = kDefaultTimeoutMs;
};

namespace detail {

struct LoopState {
    SearchSpace space;
    std::set<ResourceConfig> tested;
    std::vector<ResourceConfig> train_configs;
    std::vector<EncodedConfig> train_inputs;
    std::vector<double> train_values;
    std::optional<double> best_so_far;

    std::vector<ResourceConfig> untested() const {
        std::vector<ResourceConfig> out;
        for (const ResourceConfig& c : enumerate(space)) {
            if (!tested.count(c)) out.push_back(c);
        }
        return out;
    }

    /// Runs one trial; returns false when the evaluation failed (OOM).
    bool observe(OptimizationTrace& trace, const Evaluator& evaluate,
                 const TrialObjective& objective, const ResourceConfig& config,
                 std::uint64_t trial_seed) {
        const int index = static_cast<int>(trace.trials.size());
        const RunResult result = evaluate(config, trial_seed);
        const std::optional<double> value = objective.value(config, result);
        tested.insert(config);

        TrialRecord record{index, config, result, value, best_so_far, std::nullopt};
        if (value) {
            if (!best_so_far || *value < *best_so_far) best_so_far = value;
            record.best_so_far = best_so_far;
            train_configs.push_back(config);
            train_inputs.push_back(encode(config, space));
            train_values.push_back(*value);
            trace.trials.push_back(std::move(record));
            return true;
        }

        // OOM: slice the space and drop training points that fell below the
        // new floor; the failed trial itself contributes no training point.
        space = slice_on_failure(space, config.memory_mb);
        record.sliced_floor_mb = space.memory_floor_mb;
        trace.trials.push_back(std::move(record));
        for (std::size_t i = train_configs.size(); i-- > 0;) {
            if (train_configs[i].memory_mb <= space.memory_floor_mb) {
                train_configs.erase(train_configs.begin() + static_cast<long>(i));
                train_inputs.erase(train_inputs.begin() + static_cast<long>(i));
                train_values.erase(train_values.begin() + static_cast<long>(i));
            }
        }
        return false;
    }
};

inline std::optional<ResourceConfig> random_untested(const LoopState& state, Rng& rng) {
    std::vector<ResourceConfig> pool = state.untested();
    if (pool.empty()) return std::nullopt;
    return pool[rng.uniform_below(pool.size())];
}

} // namespace detail

/// Model-guided optimization: n_init random trials, then repeatedly fit the
/// surrogate on all surviving observations and evaluate the untested config
/// with the highest expected improvement. OOM failures slice the space.
inline OptimizationTrace run_bo(const Evaluator& evaluate, const SearchSpace& space,
                                const TrialObjective& objective, SurrogateKind surrogate_kind,
                                const RunSettings& settings, std::uint64_t seed) {
    if (settings.n_init < 1 || settings.budget < settings.n_init) {
        throw InvalidArgumentError("budget must be >= n_init >= 1");
    }
    OptimizationTrace trace;
    trace.seed = seed;
    trace.method = to_string(surrogate_kind);
    trace.objective = objective.objective();
    trace.initial_space = space;

    detail::LoopState state;
    state.space = space;
    Rng design_rng(split_seed(seed, 0xD0));

    for (std::size_t t = 0; t < settings.budget; ++t) {
        std::optional<ResourceConfig> candidate;
        if (t >= settings.n_init && !state.train_values.empty()) {
            SurrogateSpec spec;
            spec.kind = surrogate_kind;
            spec.rng_seed = split_seed(seed, 0xF17 + t);
            const auto model = fit_surrogate(spec, state.train_inputs, state.train_values);
            const double incumbent =
                *std::min_element(state.train_values.begin(), state.train_values.end());
            double best_ei = -1.0;
            for (const ResourceConfig& c : state.untested()) {
                const Prediction p = model->predict(encode(c, state.space));
                const double ei = expected_improvement(p.mean, p.stddev, incumbent);
                if (ei > best_ei) { // first strict max keeps enumeration-order ties
                    best_ei = ei;
                    candidate = c;
                }
            }
        } else {
            candidate = detail::random_untested(state, design_rng);
        }
        if (!candidate) break; // every remaining config already tested
        state.observe(trace, evaluate, objective, *candidate, split_seed(seed, t));
    }

    trace.final_space = state.space;
    return trace;
}

/// Sampling-based optimization (random or Latin hypercube); failures slice
/// the space and planned samples are re-drawn from what remains.
inline OptimizationTrace run_sampling(const Evaluator& evaluate, const SearchSpace& space,
                                      const TrialObjective& objective, Method::Type method,
                                      const RunSettings& settings, std::uint64_t seed) {
    if (method == Method::Type::bo) throw InvalidArgumentError("use run_bo for model-based runs");
    OptimizationTrace trace;
    trace.seed = seed;
    trace.method = method == Method::Type::random ? "random" : "lhs";
    trace.objective = objective.objective();
    trace.initial_space = space;

    detail::LoopState state;
    state.space = space;
    Rng design_rng(split_seed(seed, 0xD0));

    std::vector<ResourceConfig> plan;
    if (method == Method::Type::lhs) plan = lhs_design(space, settings.budget, seed);

    for (std::size_t t = 0; t < settings.budget; ++t) {
        std::optional<ResourceConfig> candidate;
        if (method == Method::Type::lhs) {
            candidate = plan[t];
            const bool sliced = candidate->memory_mb <= state.space.memory_floor_mb;
            if (sliced || state.tested.count(*candidate)) {
                candidate = detail::snap_to_valid(*candidate, state.space, state.tested);
            }
        } else {
            candidate = detail::random_untested(state, design_rng);
        }
        if (!candidate) break;
        state.observe(trace, evaluate, objective, *candidate, split_seed(seed, t));
    }

    trace.final_space = state.space;
    return trace;
}

/// Dispatches on the method label used across the CLI:
/// gp|rf|et|gbrt run BO, random|lhs run plain sampling.
inline OptimizationTrace run_method(const Evaluator& evaluate, const SearchSpace& space,
                                    const TrialObjective& objective, const Method& method,
                                    const RunSettings& settings, std::uint64_t seed) {
    if (method.type == Method::Type::bo) {
        return run_bo(evaluate, space, objective, method.surrogate, settings, seed);
    }
    return run_sampling(evaluate, space, objective, method.type, settings, seed);
}

/// Refits the method's surrogate on every observation that survived slicing;
/// the model half of a finished run. Sampling methods default to a GP.
inline std::unique_ptr<Surrogate> model_from_trace(const OptimizationTrace& trace) {
    std::vector<EncodedConfig> inputs;
    std::vector<double> values;
    for (const TrialRecord& t : trace.trials) {
        if (!t.objective) continue;
        if (t.config.memory_mb <= trace.final_space.memory_floor_mb) continue;
        inputs.push_back(encode(t.config, trace.final_space));
        values.push_back(*t.objective);
    }
    if (inputs.empty()) throw InvalidArgumentError("trace holds no surviving observations");
    SurrogateSpec spec;
    const Method method = Method::from_string(trace.method);
    spec.kind = method.type == Method::Type::bo ? method.surrogate : SurrogateKind::gp;
    spec.rng_seed = split_seed(trace.seed, 0xF1A);
    return fit_surrogate(spec, std::move(inputs), std::move(values));
}

} // namespace faastune
