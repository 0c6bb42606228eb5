#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "faastune/core.hpp"
#include "faastune/rng.hpp"
#include "faastune/space.hpp"
#include "faastune/stats.hpp"

namespace faastune {

enum class SurrogateKind { gp, rf, et, gbrt };

inline std::string to_string(SurrogateKind k) {
    switch (k) {
    case SurrogateKind::gp: return "gp";
    case SurrogateKind::rf: return "rf";
    case SurrogateKind::et: return "et";
    case SurrogateKind::gbrt: return "gbrt";
    }
    return "?";
}

inline SurrogateKind surrogate_kind_from_string(const std::string& s) {
    if (s == "gp") return SurrogateKind::gp;
    if (s == "rf") return SurrogateKind::rf;
    if (s == "et") return SurrogateKind::et;
    if (s == "gbrt") return SurrogateKind::gbrt;
    throw InvalidArgumentError("unknown surrogate kind: " + s);
}

/// Model selection plus the pinned hyperparameters. Defaults match the
/// library's reproducible baseline: 100-tree ensembles, depth-3 boosting with
/// learning rate 0.1, and a Matern-5/2 GP tuned by marginal likelihood with
/// 3 random restarts.
struct SurrogateSpec {
    SurrogateKind kind = SurrogateKind::gp;
    std::uint64_t rng_seed = 0;
    int ensemble_size = 100; // trees (rf/et) or boosting stages (gbrt)
    int max_depth = 3;       // gbrt stage depth
    double learning_rate = 0.1;
    int gp_restarts = 3;     // random restarts on top of the default start

    void validate() const {
        if (ensemble_size < 1) throw InvalidArgumentError("ensemble size must be >= 1");
        if (kind == SurrogateKind::gbrt && max_depth < 1) {
            throw InvalidArgumentError("boosting depth must be >= 1");
        }
        if (kind == SurrogateKind::gbrt && learning_rate <= 0.0) {
            throw InvalidArgumentError("learning rate must be > 0");
        }
        if (kind == SurrogateKind::gp && gp_restarts < 0) {
            throw InvalidArgumentError("restart count must be >= 0");
        }
    }
};

struct Prediction {
    double mean = 0.0;
    double stddev = 0.0;
};

/// A fitted model over encoded configs. Immutable; predict is safe to call
/// concurrently. Keeps its training set so models can be serialized as
/// (spec, data) and refit on load.
class Surrogate {
public:
    virtual ~Surrogate() = default;

    Prediction predict(const EncodedConfig& x) const {
        if (x.size() != dimension()) {
            throw InvalidArgumentError("query has dimension " + std::to_string(x.size()) +
                                       ", model expects " + std::to_string(dimension()));
        }
        return do_predict(x);
    }

    SurrogateKind kind() const { return spec_.kind; }
    const SurrogateSpec& spec() const { return spec_; }
    std::size_t dimension() const { return inputs_.empty() ? 0 : inputs_[0].size(); }
    const std::vector<EncodedConfig>& training_inputs() const { return inputs_; }
    const std::vector<double>& training_values() const { return values_; }

protected:
    Surrogate(SurrogateSpec spec, std::vector<EncodedConfig> inputs, std::vector<double> values)
        : spec_(std::move(spec)), inputs_(std::move(inputs)), values_(std::move(values)) {}

    virtual Prediction do_predict(const EncodedConfig& x) const = 0;

    SurrogateSpec spec_;
    std::vector<EncodedConfig> inputs_;
    std::vector<double> values_;
};

namespace detail {

inline void check_training_set(const std::vector<EncodedConfig>& inputs,
                               const std::vector<double>& values) {
    if (inputs.empty() || inputs.size() != values.size()) {
        throw InvalidArgumentError("training set must be non-empty with matching sizes");
    }
    const std::size_t dim = inputs[0].size();
    if (dim == 0) throw InvalidArgumentError("training inputs must have dimension >= 1");
    for (const auto& x : inputs) {
        if (x.size() != dim) throw InvalidArgumentError("inconsistent training dimensions");
        for (double v : x) {
            if (!std::isfinite(v)) throw InvalidArgumentError("non-finite training input");
        }
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw InvalidArgumentError("non-finite training value");
    }
}

// ---------------------------------------------------------------------------
// Gaussian process, Matern 5/2 kernel with amplitude and noise terms.
// ---------------------------------------------------------------------------

struct GpBounds {
    // Variance-scale bounds for the constant amplitude and the noise term,
    // plus the length-scale range. All searched in log space.
    double amp_lo = 1e-3, amp_hi = 1e3;
    double len_lo = 1e-2, len_hi = 1e2;
    double noise_lo = 1e-10, noise_hi = 1e-1;
};

inline double matern52(double r, double length) {
    const double s = std::sqrt(5.0) * r / length;
    return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

/// Downhill simplex minimizer with box projection, used for the 3-parameter
/// marginal-likelihood search. Deterministic.
template <typename F>
inline std::pair<std::vector<double>, double>
nelder_mead(F&& f, std::vector<double> start, const std::vector<double>& lo,
            const std::vector<double>& hi, int max_iters = 250) {
    const std::size_t n = start.size();
    auto clamp = [&](std::vector<double> u) {
        for (std::size_t i = 0; i < n; ++i) u[i] = std::clamp(u[i], lo[i], hi[i]);
        return u;
    };
    std::vector<std::vector<double>> simplex;
    simplex.push_back(clamp(start));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v = start;
        v[i] += 0.5 * (hi[i] - lo[i]) * 0.05 + 0.25;
        simplex.push_back(clamp(v));
    }
    std::vector<double> values(n + 1);
    for (std::size_t i = 0; i <= n; ++i) values[i] = f(simplex[i]);

    auto order = [&] {
        std::vector<std::size_t> idx(n + 1);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::vector<std::vector<double>> s2;
        std::vector<double> v2;
        for (std::size_t i : idx) {
            s2.push_back(simplex[i]);
            v2.push_back(values[i]);
        }
        simplex = std::move(s2);
        values = std::move(v2);
    };

    for (int iter = 0; iter < max_iters; ++iter) {
        order();
        if (std::abs(values.back() - values.front()) < 1e-10) break;
        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto combine = [&](double t) {
            std::vector<double> u(n);
            for (std::size_t j = 0; j < n; ++j) {
                u[j] = centroid[j] + t * (simplex.back()[j] - centroid[j]);
            }
            return clamp(u);
        };

        std::vector<double> reflected = combine(-1.0);
        const double fr = f(reflected);
        if (fr < values.front()) {
            std::vector<double> expanded = combine(-2.0);
            const double fe = f(expanded);
            if (fe < fr) {
                simplex.back() = expanded;
                values.back() = fe;
            } else {
                simplex.back() = reflected;
                values.back() = fr;
            }
        } else if (fr < values[n - 1]) {
            simplex.back() = reflected;
            values.back() = fr;
        } else {
            std::vector<double> contracted = combine(0.5);
            const double fc = f(contracted);
            if (fc < values.back()) {
                simplex.back() = contracted;
                values.back() = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                    }
                    values[i] = f(simplex[i]);
                }
            }
        }
    }
    order();
    return {simplex.front(), values.front()};
}

class GaussianProcess final : public Surrogate {
public:
    GaussianProcess(SurrogateSpec spec, std::vector<EncodedConfig> inputs,
                    std::vector<double> values)
        : Surrogate(std::move(spec), std::move(inputs), std::move(values)) {
        const Eigen::Index n = static_cast<Eigen::Index>(inputs_.size());
        const Eigen::Index dim = static_cast<Eigen::Index>(dimension());
        x_ = Eigen::MatrixXd(n, dim);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < dim; ++j) {
                x_(i, j) = inputs_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            }
        }
        // Standardize targets so the amplitude/noise search is well scaled.
        y_mean_ = mean(values_);
        y_scale_ = population_stddev(values_);
        if (y_scale_ < 1e-12) y_scale_ = 1.0;
        y_std_ = Eigen::VectorXd(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            y_std_(i) = (values_[static_cast<std::size_t>(i)] - y_mean_) / y_scale_;
        }

        distances_ = Eigen::MatrixXd(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double d = (x_.row(i) - x_.row(j)).norm();
                distances_(i, j) = d;
                distances_(j, i) = d;
            }
        }
        optimize_hyperparameters();
        factorize(amplitude_, length_, noise_);
    }

    double amplitude() const { return amplitude_; }
    double length_scale() const { return length_; }
    double noise_variance() const { return noise_; }

protected:
    Prediction do_predict(const EncodedConfig& q) const override {
        const Eigen::Index n = x_.rows();
        Eigen::VectorXd k(n);
        Eigen::Map<const Eigen::VectorXd> qv(q.data(), static_cast<Eigen::Index>(q.size()));
        for (Eigen::Index i = 0; i < n; ++i) {
            k(i) = amplitude_ * matern52((x_.row(i).transpose() - qv).norm(), length_);
        }
        const double mean_std = k.dot(alpha_);
        const Eigen::VectorXd v = chol_.matrixL().solve(k);
        const double var = std::max(0.0, amplitude_ - v.squaredNorm());
        return {y_mean_ + y_scale_ * mean_std, y_scale_ * std::sqrt(var)};
    }

private:
    // Negative log marginal likelihood of the standardized targets.
    double negative_lml(double amp, double length, double noise) const {
        const Eigen::Index n = x_.rows();
        Eigen::MatrixXd k(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                double v = amp * matern52(distances_(i, j), length);
                if (i == j) v += noise;
                k(i, j) = v;
                k(j, i) = v;
            }
        }
        Eigen::LLT<Eigen::MatrixXd> llt(k);
        if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
        const Eigen::VectorXd a = llt.solve(y_std_);
        double log_det = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(llt.matrixL()(i, i));
        return 0.5 * y_std_.dot(a) + log_det +
               0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
    }

    void optimize_hyperparameters() {
        const GpBounds b;
        const std::vector<double> lo = {std::log(b.amp_lo), std::log(b.len_lo),
                                        std::log(b.noise_lo)};
        const std::vector<double> hi = {std::log(b.amp_hi), std::log(b.len_hi),
                                        std::log(b.noise_hi)};
        auto objective = [&](const std::vector<double>& u) {
            return negative_lml(std::exp(u[0]), std::exp(u[1]), std::exp(u[2]));
        };

        std::vector<std::vector<double>> starts;
        starts.push_back({std::log(1.0), std::log(1.0), std::log(1e-6)});
        Rng rng(split_seed(spec_.rng_seed, 0x6770));
        for (int r = 0; r < spec_.gp_restarts; ++r) {
            std::vector<double> s(3);
            for (std::size_t j = 0; j < 3; ++j) s[j] = rng.uniform(lo[j], hi[j]);
            starts.push_back(std::move(s));
        }

        double best = std::numeric_limits<double>::infinity();
        std::vector<double> best_u = starts.front();
        for (const auto& s : starts) {
            auto [u, value] = nelder_mead(objective, s, lo, hi);
            if (value < best) {
                best = value;
                best_u = u;
            }
        }
        amplitude_ = std::exp(best_u[0]);
        length_ = std::exp(best_u[1]);
        noise_ = std::exp(best_u[2]);
    }

    void factorize(double amp, double length, double noise) {
        const Eigen::Index n = x_.rows();
        Eigen::MatrixXd k(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                double v = amp * matern52(distances_(i, j), length);
                if (i == j) v += noise;
                k(i, j) = v;
                k(j, i) = v;
            }
        }
        chol_.compute(k);
        if (chol_.info() != Eigen::Success) {
            // Retry with the noise floor raised; conflicting duplicates end here.
            chol_.compute(k + 1e-8 * Eigen::MatrixXd::Identity(n, n));
        }
        alpha_ = chol_.solve(y_std_);
    }

    Eigen::MatrixXd x_;
    Eigen::MatrixXd distances_;
    Eigen::VectorXd y_std_;
    Eigen::VectorXd alpha_;
    Eigen::LLT<Eigen::MatrixXd> chol_;
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    double amplitude_ = 1.0;
    double length_ = 1.0;
    double noise_ = 1e-6;
};

// ---------------------------------------------------------------------------
// CART regression trees: exact best splits (RF, GBRT) or uniformly random
// thresholds (ET). min_samples_leaf = 1 throughout.
// ---------------------------------------------------------------------------

class RegressionTree {
public:
    struct Params {
        bool random_thresholds = false;
        int max_depth = -1; // unlimited when negative
    };

    void fit(const std::vector<EncodedConfig>& x, const std::vector<double>& y,
             std::vector<std::size_t> indices, const Params& params, Rng& rng) {
        nodes_.clear();
        build(x, y, std::move(indices), params, rng, 0);
    }

    double predict(const EncodedConfig& q) const { return nodes_[leaf_of(q)].value; }

    std::size_t leaf_of(const EncodedConfig& q) const {
        std::size_t i = 0;
        while (nodes_[i].feature >= 0) {
            i = q[static_cast<std::size_t>(nodes_[i].feature)] <= nodes_[i].threshold
                    ? nodes_[i].left
                    : nodes_[i].right;
        }
        return i;
    }

    template <typename F>
    void adjust_leaves(F&& adjust) {
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (nodes_[i].feature < 0) nodes_[i].value = adjust(i, nodes_[i].value);
        }
    }

private:
    struct Node {
        int feature = -1; // leaf when negative
        double threshold = 0.0;
        std::size_t left = 0;
        std::size_t right = 0;
        double value = 0.0;
    };

    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double score = std::numeric_limits<double>::infinity(); // summed SSE
    };

    static double subset_mean(const std::vector<double>& y,
                              const std::vector<std::size_t>& indices) {
        double s = 0.0;
        for (std::size_t i : indices) s += y[i];
        return s / static_cast<double>(indices.size());
    }

    std::size_t build(const std::vector<EncodedConfig>& x, const std::vector<double>& y,
                      std::vector<std::size_t> indices, const Params& params, Rng& rng,
                      int depth) {
        const std::size_t id = nodes_.size();
        nodes_.push_back(Node{});
        nodes_[id].value = subset_mean(y, indices);

        if (indices.size() < 2 || (params.max_depth >= 0 && depth >= params.max_depth)) {
            return id;
        }
        bool constant = true;
        for (std::size_t i : indices) {
            if (y[i] != y[indices[0]]) {
                constant = false;
                break;
            }
        }
        Split split = constant ? Split{}
                      : params.random_thresholds
                          ? find_random_split(x, y, indices, rng)
                          : find_best_split(x, y, indices);
        if (split.feature < 0) return id;

        std::vector<std::size_t> left, right;
        for (std::size_t i : indices) {
            (x[i][static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right)
                .push_back(i);
        }
        indices.clear();
        indices.shrink_to_fit();

        const std::size_t left_id = build(x, y, std::move(left), params, rng, depth + 1);
        const std::size_t right_id = build(x, y, std::move(right), params, rng, depth + 1);
        nodes_[id].feature = split.feature;
        nodes_[id].threshold = split.threshold;
        nodes_[id].left = left_id;
        nodes_[id].right = right_id;
        return id;
    }

    static Split find_best_split(const std::vector<EncodedConfig>& x, const std::vector<double>& y,
                                 const std::vector<std::size_t>& indices) {
        const std::size_t dim = x[indices[0]].size();
        Split best;
        std::vector<std::pair<double, double>> pairs(indices.size());
        for (std::size_t f = 0; f < dim; ++f) {
            for (std::size_t i = 0; i < indices.size(); ++i) {
                pairs[i] = {x[indices[i]][f], y[indices[i]]};
            }
            std::sort(pairs.begin(), pairs.end());
            if (pairs.front().first == pairs.back().first) continue;

            double left_sum = 0.0, left_sq = 0.0;
            double right_sum = 0.0, right_sq = 0.0;
            for (const auto& [xv, yv] : pairs) {
                right_sum += yv;
                right_sq += yv * yv;
            }
            const std::size_t n = pairs.size();
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left_sum += pairs[i].second;
                left_sq += pairs[i].second * pairs[i].second;
                right_sum -= pairs[i].second;
                right_sq -= pairs[i].second * pairs[i].second;
                if (pairs[i].first == pairs[i + 1].first) continue;
                const double nl = static_cast<double>(i + 1);
                const double nr = static_cast<double>(n - i - 1);
                const double sse =
                    (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
                if (sse < best.score - 1e-15) {
                    best.score = sse;
                    best.feature = static_cast<int>(f);
                    best.threshold = 0.5 * (pairs[i].first + pairs[i + 1].first);
                }
            }
        }
        return best;
    }

    static double partition_sse(const std::vector<EncodedConfig>& x, const std::vector<double>& y,
                                const std::vector<std::size_t>& indices, std::size_t feature,
                                double threshold) {
        double ls = 0.0, lq = 0.0, rs = 0.0, rq = 0.0;
        double nl = 0.0, nr = 0.0;
        for (std::size_t i : indices) {
            if (x[i][feature] <= threshold) {
                ls += y[i];
                lq += y[i] * y[i];
                nl += 1.0;
            } else {
                rs += y[i];
                rq += y[i] * y[i];
                nr += 1.0;
            }
        }
        if (nl == 0.0 || nr == 0.0) return std::numeric_limits<double>::infinity();
        return (lq - ls * ls / nl) + (rq - rs * rs / nr);
    }

    static Split find_random_split(const std::vector<EncodedConfig>& x,
                                   const std::vector<double>& y,
                                   const std::vector<std::size_t>& indices, Rng& rng) {
        const std::size_t dim = x[indices[0]].size();
        Split best;
        for (std::size_t f = 0; f < dim; ++f) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            for (std::size_t i : indices) {
                lo = std::min(lo, x[i][f]);
                hi = std::max(hi, x[i][f]);
            }
            if (!(hi > lo)) continue;
            const double threshold = rng.uniform(lo, hi);
            const double sse = partition_sse(x, y, indices, f, threshold);
            if (sse < best.score - 1e-15) {
                best.score = sse;
                best.feature = static_cast<int>(f);
                best.threshold = threshold;
            }
        }
        return best;
    }

    std::vector<Node> nodes_;
};

/// Random forest / extra trees: mean prediction, uncertainty from the spread
/// of per-tree predictions.
class TreeEnsemble final : public Surrogate {
public:
    TreeEnsemble(SurrogateSpec spec, std::vector<EncodedConfig> inputs, std::vector<double> values)
        : Surrogate(std::move(spec), std::move(inputs), std::move(values)) {
        const bool extra = spec_.kind == SurrogateKind::et;
        const std::size_t n = inputs_.size();
        RegressionTree::Params params;
        params.random_thresholds = extra;
        trees_.resize(static_cast<std::size_t>(spec_.ensemble_size));
        for (std::size_t t = 0; t < trees_.size(); ++t) {
            Rng rng(split_seed(spec_.rng_seed, t));
            std::vector<std::size_t> indices(n);
            if (extra) {
                std::iota(indices.begin(), indices.end(), 0); // no bootstrap
            } else {
                for (std::size_t i = 0; i < n; ++i) indices[i] = rng.uniform_below(n);
            }
            trees_[t].fit(inputs_, values_, std::move(indices), params, rng);
        }
    }

protected:
    Prediction do_predict(const EncodedConfig& q) const override {
        std::vector<double> preds;
        preds.reserve(trees_.size());
        for (const RegressionTree& t : trees_) preds.push_back(t.predict(q));
        auto [m, sd] = mean_and_population_stddev(preds);
        return {m, sd};
    }

private:
    std::vector<RegressionTree> trees_;
};

// ---------------------------------------------------------------------------
// Gradient-boosted trees: squared-loss point model plus 0.16/0.84 quantile
// boosters; the spread of the two quantiles provides the uncertainty.
// ---------------------------------------------------------------------------

class GradientBoostedTrees final : public Surrogate {
public:
    GradientBoostedTrees(SurrogateSpec spec, std::vector<EncodedConfig> inputs,
                         std::vector<double> values)
        : Surrogate(std::move(spec), std::move(inputs), std::move(values)) {
        fit_point(point_);
        fit_quantile(lo_, 0.16);
        fit_quantile(hi_, 0.84);
    }

protected:
    Prediction do_predict(const EncodedConfig& q) const override {
        const double mean = evaluate(point_, q);
        const double spread = evaluate(hi_, q) - evaluate(lo_, q);
        return {mean, std::max(0.0, 0.5 * spread)};
    }

private:
    struct Booster {
        double base = 0.0;
        std::vector<RegressionTree> trees;
    };

    double evaluate(const Booster& b, const EncodedConfig& q) const {
        double f = b.base;
        for (const RegressionTree& t : b.trees) f += spec_.learning_rate * t.predict(q);
        return f;
    }

    void fit_point(Booster& b) {
        b.base = mean(values_);
        std::vector<double> current(values_.size(), b.base);
        RegressionTree::Params params{.random_thresholds = false, .max_depth = spec_.max_depth};
        std::vector<std::size_t> all(values_.size());
        std::iota(all.begin(), all.end(), 0);
        Rng rng(split_seed(spec_.rng_seed, 0x9b));
        for (int stage = 0; stage < spec_.ensemble_size; ++stage) {
            std::vector<double> residual(values_.size());
            for (std::size_t i = 0; i < values_.size(); ++i) residual[i] = values_[i] - current[i];
            RegressionTree tree;
            tree.fit(inputs_, residual, all, params, rng);
            for (std::size_t i = 0; i < values_.size(); ++i) {
                current[i] += spec_.learning_rate * tree.predict(inputs_[i]);
            }
            b.trees.push_back(std::move(tree));
        }
    }

    void fit_quantile(Booster& b, double tau) {
        b.base = percentile(values_, tau * 100.0);
        std::vector<double> current(values_.size(), b.base);
        RegressionTree::Params params{.random_thresholds = false, .max_depth = spec_.max_depth};
        std::vector<std::size_t> all(values_.size());
        std::iota(all.begin(), all.end(), 0);
        Rng rng(split_seed(spec_.rng_seed, tau < 0.5 ? 0x16 : 0x84));
        for (int stage = 0; stage < spec_.ensemble_size; ++stage) {
            // Pinball-loss gradient step: grow the tree on the sign residuals,
            // then set each leaf to the tau-quantile of its raw residuals.
            std::vector<double> gradient(values_.size());
            for (std::size_t i = 0; i < values_.size(); ++i) {
                gradient[i] = values_[i] > current[i] ? tau : tau - 1.0;
            }
            RegressionTree tree;
            tree.fit(inputs_, gradient, all, params, rng);

            std::map<std::size_t, std::vector<double>> leaf_residuals;
            for (std::size_t i = 0; i < values_.size(); ++i) {
                leaf_residuals[tree.leaf_of(inputs_[i])].push_back(values_[i] - current[i]);
            }
            tree.adjust_leaves([&](std::size_t leaf, double fallback) {
                auto it = leaf_residuals.find(leaf);
                if (it == leaf_residuals.end()) return fallback;
                return percentile(it->second, tau * 100.0);
            });
            for (std::size_t i = 0; i < values_.size(); ++i) {
                current[i] += spec_.learning_rate * tree.predict(inputs_[i]);
            }
            b.trees.push_back(std::move(tree));
        }
    }

    Booster point_, lo_, hi_;
};

} // namespace detail

/// Fits a surrogate of the requested kind. Deterministic given spec.rng_seed.
inline std::unique_ptr<Surrogate> fit_surrogate(const SurrogateSpec& spec,
                                                std::vector<EncodedConfig> inputs,
                                                std::vector<double> values) {
    spec.validate();
    detail::check_training_set(inputs, values);
    switch (spec.kind) {
    case SurrogateKind::gp:
        return std::make_unique<detail::GaussianProcess>(spec, std::move(inputs),
                                                         std::move(values));
    case SurrogateKind::rf:
    case SurrogateKind::et:
        return std::make_unique<detail::TreeEnsemble>(spec, std::move(inputs), std::move(values));
    case SurrogateKind::gbrt:
        return std::make_unique<detail::GradientBoostedTrees>(spec, std::move(inputs),
                                                              std::move(values));
    }
    throw InvalidArgumentError("unhandled surrogate kind");
}

} // namespace faastune
