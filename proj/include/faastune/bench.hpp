#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "faastune/core.hpp"
#include "faastune/rng.hpp"
#include "faastune/space.hpp"
#include "faastune/stats.hpp"

namespace faastune {

constexpr double kDefaultTimeoutMs = 600'000.0;

enum class RunStatus { ok, oom, timeout };

/// Outcome of one function invocation. duration_ms and peak_mem_mb are
/// meaningful only when status == ok.
struct RunResult {
    RunStatus status = RunStatus::ok;
    double duration_ms = 0.0;
    double peak_mem_mb = 0.0;

    static RunResult success(double duration_ms, double peak_mem_mb) {
        return {RunStatus::ok, duration_ms, peak_mem_mb};
    }
    static RunResult out_of_memory() { return {RunStatus::oom, 0.0, 0.0}; }
    static RunResult timed_out() { return {RunStatus::timeout, 0.0, 0.0}; }

    bool ok() const { return status == RunStatus::ok; }
    friend bool operator==(const RunResult&, const RunResult&) = default;
};

inline std::string to_string(RunStatus s) {
    switch (s) {
    case RunStatus::ok: return "ok";
    case RunStatus::oom: return "oom";
    case RunStatus::timeout: return "timeout";
    }
    return "?";
}

/// Recorded performance measurements keyed by (function, input, config),
/// with one or more repetitions per key. Read-only after loading.
class GridDataset {
public:
    struct Key {
        std::string function_id;
        std::string input_id;
        ResourceConfig config;
        friend auto operator<=>(const Key&, const Key&) = default;
    };

    explicit GridDataset(SearchSpace space) : space_(std::move(space)) {}

    void add(const std::string& function_id, const std::string& input_id,
             const ResourceConfig& config, const RunResult& result) {
        if (!space_.on_axes(config)) {
            throw OffAxisError("grid entry is not on the declared axes");
        }
        runs_[Key{function_id, input_id, config}].push_back(result);
    }

    bool contains(const std::string& function_id, const std::string& input_id,
                  const ResourceConfig& config) const {
        return runs_.count(Key{function_id, input_id, config}) > 0;
    }

    const std::vector<RunResult>& at(const std::string& function_id, const std::string& input_id,
                                     const ResourceConfig& config) const {
        auto it = runs_.find(Key{function_id, input_id, config});
        if (it == runs_.end()) {
            throw MissingKeyError("no recorded runs for (" + function_id + ", " + input_id + ", " +
                                  config.family + ", " + std::to_string(config.cpu_share) + ", " +
                                  std::to_string(config.memory_mb) + " MB)");
        }
        return it->second;
    }

    std::vector<std::string> function_ids() const {
        std::vector<std::string> out;
        for (const auto& [key, reps] : runs_) {
            if (out.empty() || out.back() != key.function_id) {
                if (std::find(out.begin(), out.end(), key.function_id) == out.end()) {
                    out.push_back(key.function_id);
                }
            }
        }
        return out;
    }

    std::vector<std::string> input_ids(const std::string& function_id) const {
        std::vector<std::string> out;
        for (const auto& [key, reps] : runs_) {
            if (key.function_id != function_id) continue;
            if (std::find(out.begin(), out.end(), key.input_id) == out.end()) {
                out.push_back(key.input_id);
            }
        }
        return out;
    }

    const SearchSpace& space() const { return space_; }
    const std::map<Key, std::vector<RunResult>>& runs() const { return runs_; }

private:
    SearchSpace space_;
    std::map<Key, std::vector<RunResult>> runs_;
};

/// Returns one recorded repetition, chosen uniformly by the seed.
inline RunResult replay(const GridDataset& grid, const std::string& function_id,
                        const std::string& input_id, const ResourceConfig& config,
                        std::uint64_t seed) {
    const std::vector<RunResult>& reps = grid.at(function_id, input_id, config);
    Rng rng(seed);
    return reps[rng.uniform_below(reps.size())];
}

enum class Archetype { cpu_bound, memory_cliff, network_plateau };

inline std::string to_string(Archetype a) {
    switch (a) {
    case Archetype::cpu_bound: return "cpu_bound";
    case Archetype::memory_cliff: return "memory_cliff";
    case Archetype::network_plateau: return "network_plateau";
    }
    return "?";
}

/// Parameterized stand-in for a real serverless function: a serial phase, a
/// parallelizable phase that scales with the CPU share up to parallel_cap,
/// a hard memory requirement, and per-family / per-input multipliers.
struct SyntheticFunctionSpec {
    std::string name;
    Archetype archetype = Archetype::cpu_bound;
    double serial_ms = 0.0;
    double parallel_ms = 0.0;
    double parallel_cap = 1.0;       // most vCPUs the parallel phase can use
    int required_mem_mb = 128;
    std::map<std::string, double> family_speed; // duration multiplier, default 1
    std::map<std::string, double> input_scale;  // duration multiplier, default 1
    double noise_cv = 0.0;           // coefficient of variation of lognormal noise
    double timeout_ms = kDefaultTimeoutMs;
};

namespace detail {
inline double multiplier_or_one(const std::map<std::string, double>& m, const std::string& key) {
    auto it = m.find(key);
    return it == m.end() ? 1.0 : it->second;
}
} // namespace detail

/// Noise-free duration of the synthetic model; the deterministic core of
/// synth_eval and the oracle used by the evaluation harness.
inline double synth_true_duration(const SyntheticFunctionSpec& spec, const std::string& input_id,
                                  const ResourceConfig& config) {
    // The network-bound profile stops benefiting from CPU share above 0.5.
    const double cap = spec.archetype == Archetype::network_plateau ? 0.5 : spec.parallel_cap;
    const double effective = std::min(config.cpu_share, cap);
    const double base = spec.serial_ms + spec.parallel_ms / effective;
    return detail::multiplier_or_one(spec.input_scale, input_id) *
           detail::multiplier_or_one(spec.family_speed, config.family) * base;
}

/// Simulates one invocation: OOM below the memory requirement, otherwise the
/// model duration with multiplicative lognormal noise of mean 1.
inline RunResult synth_eval(const SyntheticFunctionSpec& spec, const std::string& input_id,
                            const ResourceConfig& config, std::uint64_t seed) {
    if (config.memory_mb < spec.required_mem_mb) return RunResult::out_of_memory();
    double duration = synth_true_duration(spec, input_id, config);
    if (spec.noise_cv > 0.0) {
        const double sigma2 = std::log(1.0 + spec.noise_cv * spec.noise_cv);
        Rng rng(seed);
        duration *= std::exp(rng.normal() * std::sqrt(sigma2) - 0.5 * sigma2);
    }
    if (duration > spec.timeout_ms) return RunResult::timed_out();
    return RunResult::success(duration, static_cast<double>(spec.required_mem_mb));
}

/// Collapses repetitions into one result: any OOM marks the config failed,
/// otherwise the median duration of successful runs (worst observed peak),
/// and timeout only when nothing succeeded.
inline RunResult aggregate(const std::vector<RunResult>& results) {
    if (results.empty()) throw InvalidArgumentError("aggregate of no results");
    std::vector<double> durations;
    double peak = 0.0;
    for (const RunResult& r : results) {
        if (r.status == RunStatus::oom) return RunResult::out_of_memory();
        if (r.ok()) {
            durations.push_back(r.duration_ms);
            peak = std::max(peak, r.peak_mem_mb);
        }
    }
    if (durations.empty()) return RunResult::timed_out();
    return RunResult::success(median(std::move(durations)), peak);
}

/// An evaluator produces one run outcome for a config; the seed selects the
/// repetition / noise draw, so evaluators are pure and replayable.
using Evaluator = std::function<RunResult(const ResourceConfig&, std::uint64_t)>;

/// Replays recorded runs of one (function, input). The grid must outlive the
/// returned evaluator.
inline Evaluator make_replay_evaluator(const GridDataset& grid, std::string function_id,
                                       std::string input_id) {
    const GridDataset* g = &grid;
    return [g, function_id = std::move(function_id),
            input_id = std::move(input_id)](const ResourceConfig& c, std::uint64_t seed) {
        return replay(*g, function_id, input_id, c, seed);
    };
}

inline Evaluator make_synthetic_evaluator(SyntheticFunctionSpec spec, std::string input_id) {
    return [spec = std::move(spec), input_id = std::move(input_id)](const ResourceConfig& c,
                                                                    std::uint64_t seed) {
        return synth_eval(spec, input_id, c, seed);
    };
}

/// Runs the synthetic model over the whole space for the given inputs,
/// `reps` times per config.
inline GridDataset materialize_grid(const SyntheticFunctionSpec& spec, const SearchSpace& space,
                                    const std::vector<std::string>& input_ids, int reps,
                                    std::uint64_t seed) {
    if (reps < 1) throw InvalidArgumentError("at least one repetition per config");
    GridDataset grid(space);
    SearchSpace full = space;
    full.strategy = Strategy::decoupled();
    std::uint64_t stream = 0;
    for (const std::string& input : input_ids) {
        for (const ResourceConfig& c : enumerate(full)) {
            for (int rep = 0; rep < reps; ++rep) {
                grid.add(spec.name, input, c, synth_eval(spec, input, c, split_seed(seed, stream++)));
            }
        }
    }
    return grid;
}

/// The six bundled synthetic functions. Two lean on parallelism, one sits
/// behind a high memory cliff, one is network-bound, two are plain CPU-bound.
inline std::vector<SyntheticFunctionSpec> default_synthetic_suite() {
    const std::vector<std::string> families = SearchSpace::default_space().family_axis;
    auto speeds = [&](std::initializer_list<double> values) {
        std::map<std::string, double> m;
        std::size_t i = 0;
        for (double v : values) m[families[i++]] = v;
        return m;
    };
    const std::map<std::string, double> inputs = {
        {"default", 1.0}, {"small", 0.45}, {"large", 1.8}};

    std::vector<SyntheticFunctionSpec> suite;

    SyntheticFunctionSpec edge_detect;
    edge_detect.name = "edge_detect";
    edge_detect.archetype = Archetype::cpu_bound;
    edge_detect.serial_ms = 800.0;
    edge_detect.parallel_ms = 5200.0;
    edge_detect.parallel_cap = 1.0;
    edge_detect.required_mem_mb = 192;
    edge_detect.family_speed = speeds({0.82, 0.9, 0.85, 1.0, 0.95, 1.05});
    edge_detect.input_scale = inputs;
    edge_detect.noise_cv = 0.05;
    suite.push_back(edge_detect);

    SyntheticFunctionSpec thumbnail;
    thumbnail.name = "thumbnail";
    thumbnail.archetype = Archetype::cpu_bound;
    thumbnail.serial_ms = 300.0;
    thumbnail.parallel_ms = 1200.0;
    thumbnail.parallel_cap = 0.75;
    thumbnail.required_mem_mb = 160;
    thumbnail.family_speed = speeds({0.95, 1.02, 0.9, 1.0, 0.86, 0.98});
    thumbnail.input_scale = inputs;
    thumbnail.noise_cv = 0.05;
    suite.push_back(thumbnail);

    SyntheticFunctionSpec video_pack;
    video_pack.name = "video_pack";
    video_pack.archetype = Archetype::cpu_bound;
    video_pack.serial_ms = 2000.0;
    video_pack.parallel_ms = 8000.0;
    video_pack.parallel_cap = 2.0;
    video_pack.required_mem_mb = 640;
    video_pack.family_speed = speeds({0.88, 0.95, 0.8, 1.0, 0.9, 1.05});
    video_pack.input_scale = inputs;
    video_pack.noise_cv = 0.05;
    suite.push_back(video_pack);

    SyntheticFunctionSpec doc_parse;
    doc_parse.name = "doc_parse";
    doc_parse.archetype = Archetype::cpu_bound;
    doc_parse.serial_ms = 1500.0;
    doc_parse.parallel_ms = 4500.0;
    doc_parse.parallel_cap = 1.5;
    doc_parse.required_mem_mb = 384;
    doc_parse.family_speed = speeds({0.84, 0.92, 0.88, 1.0, 0.97, 1.03});
    doc_parse.input_scale = inputs;
    doc_parse.noise_cv = 0.05;
    suite.push_back(doc_parse);

    SyntheticFunctionSpec matrix_solve;
    matrix_solve.name = "matrix_solve";
    matrix_solve.archetype = Archetype::memory_cliff;
    matrix_solve.serial_ms = 2500.0;
    matrix_solve.parallel_ms = 2500.0;
    matrix_solve.parallel_cap = 1.25;
    matrix_solve.required_mem_mb = 1500;
    matrix_solve.family_speed = speeds({0.9, 0.97, 0.85, 1.0, 0.93, 1.02});
    matrix_solve.input_scale = inputs;
    matrix_solve.noise_cv = 0.05;
    suite.push_back(matrix_solve);

    SyntheticFunctionSpec blob_copy;
    blob_copy.name = "blob_copy";
    blob_copy.archetype = Archetype::network_plateau;
    blob_copy.serial_ms = 900.0;
    blob_copy.parallel_ms = 1800.0;
    blob_copy.parallel_cap = 2.0; // capped at 0.5 by the archetype
    blob_copy.required_mem_mb = 256;
    blob_copy.family_speed = speeds({1.0, 1.01, 0.99, 1.0, 1.02, 0.98});
    blob_copy.input_scale = inputs;
    blob_copy.noise_cv = 0.05;
    suite.push_back(blob_copy);

    return suite;
}

} // namespace faastune
