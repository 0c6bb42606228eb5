#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "faastune/core.hpp"
#include "faastune/rng.hpp"

namespace faastune {

/// Standard normal density.
inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

/// Standard normal cumulative distribution, stable for large |z|.
inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

inline double mean(const std::vector<double>& v) {
    if (v.empty()) throw InvalidArgumentError("mean of empty vector");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Population standard deviation (divides by N).
inline double population_stddev(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

inline std::pair<double, double> mean_and_population_stddev(const std::vector<double>& v) {
    return {mean(v), population_stddev(v)};
}

/// Median; even-sized inputs average the two middle values.
inline double median(std::vector<double> v) {
    if (v.empty()) throw InvalidArgumentError("median of empty vector");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Percentile in [0, 100] with linear interpolation between order statistics.
inline double percentile(std::vector<double> v, double p) {
    if (v.empty()) throw InvalidArgumentError("percentile of empty vector");
    if (p < 0.0 || p > 100.0) throw InvalidArgumentError("percentile out of [0, 100]");
    std::sort(v.begin(), v.end());
    if (v.size() == 1) return v[0];
    const double rank = p / 100.0 * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(rank));
    const double frac = rank - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

struct ConfidenceInterval {
    double point = 0.0; // mean of the sample
    double lo = 0.0;
    double hi = 0.0;
};

/// Percentile-bootstrap confidence interval for the mean of `sample`.
/// `level` is the central coverage (0.95 gives the [2.5, 97.5] band).
inline ConfidenceInterval bootstrap_mean_ci(const std::vector<double>& sample,
                                            std::uint64_t seed,
                                            int n_resamples = 1000,
                                            double level = 0.95) {
    if (sample.empty()) throw InvalidArgumentError("bootstrap of empty sample");
    ConfidenceInterval ci;
    ci.point = mean(sample);
    if (sample.size() == 1) {
        ci.lo = ci.hi = ci.point;
        return ci;
    }
    Rng rng(seed);
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(n_resamples));
    for (int b = 0; b < n_resamples; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < sample.size(); ++i) {
            s += sample[rng.uniform_below(sample.size())];
        }
        means.push_back(s / static_cast<double>(sample.size()));
    }
    const double tail = (1.0 - level) / 2.0 * 100.0;
    ci.lo = percentile(means, tail);
    ci.hi = percentile(means, 100.0 - tail);
    return ci;
}

} // namespace faastune
