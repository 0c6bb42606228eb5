#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <string>
#include <vector>

#include "faastune/core.hpp"

namespace faastune {

/// One point of the discrete allocation grid: a vCPU time share, a memory
/// limit and an instance family.
struct ResourceConfig {
    double cpu_share = 0.0;
    int memory_mb = 0;
    std::string family;

    friend bool operator==(const ResourceConfig&, const ResourceConfig&) = default;
    // Ordering for use as a map key; enumeration order is defined by the axes,
    // not by this operator.
    friend std::strong_ordering operator<=>(const ResourceConfig& a, const ResourceConfig& b) {
        if (auto c = a.family <=> b.family; c != 0) return c;
        if (a.cpu_share < b.cpu_share) return std::strong_ordering::less;
        if (a.cpu_share > b.cpu_share) return std::strong_ordering::greater;
        return a.memory_mb <=> b.memory_mb;
    }
};

enum class StrategyKind {
    decoupled,               // free choice of cpu, memory and family
    decoupled_single_family, // free cpu/memory on one nominated family
    prop_cpu,                // cpu share tied to memory, one family
    fixed_cpu,               // one full vCPU, one family
};

struct Strategy {
    StrategyKind kind = StrategyKind::decoupled;
    std::string family; // nominated family; unused for decoupled

    static Strategy decoupled() { return {StrategyKind::decoupled, {}}; }
    static Strategy decoupled_single_family(std::string f) {
        return {StrategyKind::decoupled_single_family, std::move(f)};
    }
    static Strategy prop_cpu(std::string f) { return {StrategyKind::prop_cpu, std::move(f)}; }
    static Strategy fixed_cpu(std::string f) { return {StrategyKind::fixed_cpu, std::move(f)}; }

    friend bool operator==(const Strategy&, const Strategy&) = default;
};

inline std::string strategy_label(const Strategy& s) {
    switch (s.kind) {
    case StrategyKind::decoupled: return "decoupled";
    case StrategyKind::decoupled_single_family: return "decoupled(" + s.family + ")";
    case StrategyKind::prop_cpu: return "prop_cpu(" + s.family + ")";
    case StrategyKind::fixed_cpu: return "fixed_cpu(" + s.family + ")";
    }
    return "?";
}

/// Numeric view of a config for surrogate models:
/// [cpu_norm, logmem_norm, onehot(family)...].
using EncodedConfig = std::vector<double>;

/// The discrete search space. Immutable value type: slicing returns a new
/// space instead of mutating shared state.
struct SearchSpace {
    std::vector<double> cpu_axis;          // ascending
    std::vector<int> mem_axis;             // ascending, MB
    std::vector<std::string> family_axis;  // enumeration order of families
    int memory_floor_mb = 0;               // largest memory observed to fail; 0 if none
    Strategy strategy = Strategy::decoupled();

    friend bool operator==(const SearchSpace&, const SearchSpace&) = default;

    /// The bundled default grid: 8 CPU shares x 6 memory limits x 6 families.
    static SearchSpace default_space() {
        SearchSpace s;
        s.cpu_axis = {0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
        s.mem_axis = {128, 256, 512, 768, 1024, 2048};
        s.family_axis = {"c6g", "m6g", "c5", "m5", "c5a", "m5a"};
        return s;
    }

    std::size_t family_index(const std::string& family) const {
        for (std::size_t i = 0; i < family_axis.size(); ++i) {
            if (family_axis[i] == family) return i;
        }
        throw UnknownFamilyError("unknown instance family: " + family);
    }

    bool has_family(const std::string& family) const {
        return std::find(family_axis.begin(), family_axis.end(), family) != family_axis.end();
    }

    bool on_axes(const ResourceConfig& c) const {
        return std::find(cpu_axis.begin(), cpu_axis.end(), c.cpu_share) != cpu_axis.end() &&
               std::find(mem_axis.begin(), mem_axis.end(), c.memory_mb) != mem_axis.end() &&
               has_family(c.family);
    }

    /// Memory values that survive the current floor.
    std::vector<int> valid_memories() const {
        std::vector<int> out;
        for (int m : mem_axis) {
            if (m > memory_floor_mb) out.push_back(m);
        }
        return out;
    }
};

/// CPU share coupled to memory: memory_mb/1024 vCPU rounded up to the nearest
/// axis value, clamped to the axis range.
inline double prop_cpu_share(const SearchSpace& space, int memory_mb) {
    if (space.cpu_axis.empty()) throw InvalidArgumentError("empty CPU axis");
    const double target = static_cast<double>(memory_mb) / 1024.0;
    for (double c : space.cpu_axis) {
        if (c >= target) return c;
    }
    return space.cpu_axis.back();
}

/// All configurations of the space, in (family, cpu, memory) axis order,
/// after applying the memory floor and the strategy filter.
inline std::vector<ResourceConfig> enumerate(const SearchSpace& space) {
    if (space.cpu_axis.empty() || space.mem_axis.empty() || space.family_axis.empty()) {
        throw InvalidArgumentError("search space axes must be non-empty");
    }
    const Strategy& st = space.strategy;
    if (st.kind != StrategyKind::decoupled && !space.has_family(st.family)) {
        throw UnknownFamilyError("strategy family not on the family axis: " + st.family);
    }
    const std::vector<int> mems = space.valid_memories();
    std::vector<ResourceConfig> out;
    switch (st.kind) {
    case StrategyKind::decoupled:
    case StrategyKind::decoupled_single_family:
        for (const std::string& f : space.family_axis) {
            if (st.kind == StrategyKind::decoupled_single_family && f != st.family) continue;
            for (double c : space.cpu_axis) {
                for (int m : mems) out.push_back({c, m, f});
            }
        }
        break;
    case StrategyKind::prop_cpu:
        for (int m : mems) out.push_back({prop_cpu_share(space, m), m, st.family});
        break;
    case StrategyKind::fixed_cpu:
        for (int m : mems) out.push_back({1.0, m, st.family});
        break;
    }
    return out;
}

/// The configurations a strategy admits within `space`'s axes.
inline std::vector<ResourceConfig> strategy_subspace(const Strategy& strategy,
                                                     const SearchSpace& space) {
    SearchSpace s = space;
    s.strategy = strategy;
    return enumerate(s);
}

/// Permanently removes every configuration with memory at or below the failed
/// limit. Throws SpaceExhaustedError when nothing remains.
inline SearchSpace slice_on_failure(SearchSpace space, int failed_memory_mb) {
    if (std::find(space.mem_axis.begin(), space.mem_axis.end(), failed_memory_mb) ==
        space.mem_axis.end()) {
        throw OffAxisError("failed memory limit is not on the memory axis: " +
                           std::to_string(failed_memory_mb));
    }
    space.memory_floor_mb = std::max(space.memory_floor_mb, failed_memory_mb);
    if (space.valid_memories().empty()) {
        throw SpaceExhaustedError("slicing at " + std::to_string(failed_memory_mb) +
                                  " MB removed every memory value");
    }
    return space;
}

/// Encodes a config as [cpu_norm, logmem_norm, onehot(family)...].
/// cpu is scaled linearly over the axis range, memory on a log2 scale.
inline EncodedConfig encode(const ResourceConfig& config, const SearchSpace& space) {
    if (!space.on_axes(config)) {
        throw OffAxisError("configuration is not on the declared axes");
    }
    const double cpu_lo = space.cpu_axis.front();
    const double cpu_hi = space.cpu_axis.back();
    const double mem_lo = std::log2(static_cast<double>(space.mem_axis.front()));
    const double mem_hi = std::log2(static_cast<double>(space.mem_axis.back()));

    EncodedConfig v(2 + space.family_axis.size(), 0.0);
    v[0] = cpu_hi > cpu_lo ? (config.cpu_share - cpu_lo) / (cpu_hi - cpu_lo) : 0.0;
    v[1] = mem_hi > mem_lo
               ? (std::log2(static_cast<double>(config.memory_mb)) - mem_lo) / (mem_hi - mem_lo)
               : 0.0;
    v[2 + space.family_index(config.family)] = 1.0;
    return v;
}

} // namespace faastune
