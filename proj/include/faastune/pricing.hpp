#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "faastune/core.hpp"
#include "faastune/space.hpp"

namespace faastune {

/// One instance price sheet row: alpha vCPUs and beta GB sold for
/// price_per_hour. Families sharing a cpu_group are assumed to have the same
/// per-vCPU rate; mem_group likewise for the per-GB rate.
struct InstancePriceRecord {
    std::string family;
    int alpha = 1;          // vCPU count
    double beta = 0.0;      // memory, GB
    double price_per_hour = 0.0;
    std::string cpu_group;
    std::string mem_group;
    std::optional<double> spot_multiplier; // discount for idle capacity, (0, 1]
};

struct FamilyRates {
    double per_vcpu_hour = 0.0;
    double per_gb_hour = 0.0;
    std::optional<double> spot_multiplier;
};

/// Solved per-vCPU-hour and per-GB-hour rates. Immutable after construction.
struct PricingTable {
    std::map<std::string, double> cpu_group_rates; // X per cpu_group
    std::map<std::string, double> mem_group_rates; // Y per mem_group
    std::map<std::string, FamilyRates> family_rates;
    double relative_residual = 0.0; // least-squares residual of the solve

    const FamilyRates& rates(const std::string& family) const {
        auto it = family_rates.find(family);
        if (it == family_rates.end()) {
            throw UnknownFamilyError("family not present in pricing table: " + family);
        }
        return it->second;
    }
};

namespace detail {
constexpr double kPricingResidualTolerance = 1e-9;
}

/// Solves alpha*X + beta*Y = price over all records for the per-vCPU rates X
/// (one per cpu_group) and per-GB rates Y (one per mem_group). Overdetermined
/// systems are solved by least squares; the relative residual must stay below
/// 1e-9 or the sheet is rejected as inconsistent.
inline PricingTable solve_pricing(const std::vector<InstancePriceRecord>& records) {
    if (records.empty()) throw InvalidArgumentError("no price records");
    for (const auto& r : records) {
        if (r.alpha < 1) throw InvalidArgumentError("vCPU count must be >= 1: " + r.family);
        if (r.beta <= 0.0) throw InvalidArgumentError("memory GB must be > 0: " + r.family);
        if (r.price_per_hour <= 0.0) throw InvalidArgumentError("price must be > 0: " + r.family);
    }

    std::vector<std::string> cpu_groups;
    std::vector<std::string> mem_groups;
    auto index_of = [](std::vector<std::string>& names, const std::string& n) {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == n) return i;
        }
        names.push_back(n);
        return names.size() - 1;
    };

    const std::size_t n = records.size();
    std::vector<std::pair<std::size_t, std::size_t>> cols(n);
    for (std::size_t i = 0; i < n; ++i) {
        cols[i].first = index_of(cpu_groups, records[i].cpu_group);
        cols[i].second = index_of(mem_groups, records[i].mem_group);
    }
    const std::size_t unknowns = cpu_groups.size() + mem_groups.size();

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(unknowns));
    Eigen::VectorXd b(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cols[i].first)) =
            static_cast<double>(records[i].alpha);
        a(static_cast<Eigen::Index>(i),
          static_cast<Eigen::Index>(cpu_groups.size() + cols[i].second)) = records[i].beta;
        b(static_cast<Eigen::Index>(i)) = records[i].price_per_hour;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (static_cast<std::size_t>(svd.rank()) < unknowns) {
        throw UnderdeterminedSystemError(
            "pricing system is underdetermined: " + std::to_string(unknowns) +
            " unknown rates, rank " + std::to_string(svd.rank()));
    }
    const Eigen::VectorXd x = svd.solve(b);
    const double residual = (a * x - b).norm() / b.norm();
    if (residual > detail::kPricingResidualTolerance) {
        throw InconsistentSystemError("pricing system has no consistent solution; relative residual " +
                                      std::to_string(residual));
    }

    PricingTable table;
    table.relative_residual = residual;
    for (std::size_t i = 0; i < cpu_groups.size(); ++i) {
        const double rate = x(static_cast<Eigen::Index>(i));
        if (rate <= 0.0) {
            throw NegativeRateError("solved per-vCPU rate for group '" + cpu_groups[i] +
                                    "' is not positive");
        }
        table.cpu_group_rates[cpu_groups[i]] = rate;
    }
    for (std::size_t i = 0; i < mem_groups.size(); ++i) {
        const double rate = x(static_cast<Eigen::Index>(cpu_groups.size() + i));
        if (rate <= 0.0) {
            throw NegativeRateError("solved per-GB rate for group '" + mem_groups[i] +
                                    "' is not positive");
        }
        table.mem_group_rates[mem_groups[i]] = rate;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = records[i];
        if (table.family_rates.count(r.family)) continue;
        FamilyRates fr;
        fr.per_vcpu_hour = table.cpu_group_rates.at(r.cpu_group);
        fr.per_gb_hour = table.mem_group_rates.at(r.mem_group);
        fr.spot_multiplier = r.spot_multiplier;
        table.family_rates[r.family] = fr;
    }
    return table;
}

/// Cost of one run: duration (hours) times the charged per-hour rate of
/// `cpu_share` vCPUs plus `charged_mem_mb` of memory.
inline double execution_cost(double cpu_share, double charged_mem_mb, const std::string& family,
                             double duration_ms, const PricingTable& table, bool use_spot = false) {
    if (duration_ms < 0.0) throw InvalidArgumentError("duration must be >= 0");
    const FamilyRates& r = table.rates(family);
    const double hours = duration_ms / 3'600'000.0;
    double cost = hours * (cpu_share * r.per_vcpu_hour + charged_mem_mb / 1024.0 * r.per_gb_hour);
    if (use_spot && r.spot_multiplier) cost *= *r.spot_multiplier;
    return cost;
}

inline double execution_cost(const ResourceConfig& config, double duration_ms,
                             const PricingTable& table, bool use_spot = false) {
    return execution_cost(config.cpu_share, static_cast<double>(config.memory_mb), config.family,
                          duration_ms, table, use_spot);
}

} // namespace faastune
