#include "jdvol/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace jdvol {

void validate_path(const SamplePath& path) {
    if (path.n < 2) throw std::invalid_argument("estimator: path needs at least 2 increments");
    if (path.values.size() != static_cast<std::size_t>(path.n) + 1)
        throw std::invalid_argument("estimator: values must hold n+1 entries");
    if (!(path.delta > 0.0)) throw std::invalid_argument("estimator: path delta must be positive");
    for (double v : path.values)
        if (!std::isfinite(v)) throw std::invalid_argument("estimator: path values must be finite");
}

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

void validate_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("estimator: grid must be non-empty");
    for (std::size_t g = 0; g < grid.size(); ++g) {
        if (!std::isfinite(grid[g])) throw std::invalid_argument("estimator: grid points must be finite");
        if (g > 0 && grid[g] < grid[g - 1])
            throw std::invalid_argument("estimator: grid must be sorted ascending");
    }
}

double sample_sd(const std::vector<double>& values) {
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / values.size());
}

double percentile(std::vector<double> sorted, double p) {
    const double rank = p * (sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = rank - lo;
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

NeighborCountStats summarize_counts(std::vector<long>& counts) {
    NeighborCountStats stats;
    if (counts.empty()) return stats;
    std::sort(counts.begin(), counts.end());
    stats.min = counts.front();
    stats.max = counts.back();
    stats.median = counts[counts.size() / 2];
    return stats;
}

// Shared iteration over the outer observation levels X_1..X_n lying within the
// kernel support around x. The fast variant walks a sorted copy; the naive one
// scans in time order. fn(level) must accept every level with |level-x|<=h*R.
class OuterLevels {
public:
    OuterLevels(const SamplePath& path, Engine engine) : engine_(engine) {
        levels_.assign(path.values.begin() + 1, path.values.end());
        if (engine_ == Engine::fast) std::sort(levels_.begin(), levels_.end());
    }

    template <class Fn>
    void for_each_in(double lo, double hi, Fn&& fn) const {
        if (engine_ == Engine::fast) {
            auto first = std::lower_bound(levels_.begin(), levels_.end(), lo);
            auto last = std::upper_bound(first, levels_.end(), hi);
            for (auto it = first; it != last; ++it) fn(*it);
        } else {
            for (double v : levels_)
                if (v >= lo && v <= hi) fn(v);
        }
    }

private:
    Engine engine_;
    std::vector<double> levels_;
};

}  // namespace

NeighborEngine::NeighborEngine(const SamplePath& path, double eps, Engine engine)
    : eps_(eps), engine_(engine) {
    validate_path(path);
    if (!(eps > 0.0)) throw std::invalid_argument("NeighborEngine: eps must be positive");
    const std::size_t starts = path.values.size() - 1;
    levels_.resize(starts);
    for (std::size_t j = 0; j < starts; ++j) levels_[j] = path.values[j];
    std::vector<double> d2(starts), d4(starts);
    for (std::size_t j = 0; j < starts; ++j) {
        const double d = path.values[j + 1] - path.values[j];
        const double dd = d * d;
        d2[j] = dd;
        d4[j] = dd * dd;
    }
    if (engine_ == Engine::fast) {
        std::vector<std::size_t> order(starts);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return levels_[a] < levels_[b]; });
        std::vector<double> sorted(starts);
        for (std::size_t k = 0; k < starts; ++k) sorted[k] = levels_[order[k]];
        levels_ = std::move(sorted);
        prefix_sq_.resize(starts + 1);
        prefix_quartic_.resize(starts + 1);
        prefix_sq_[0] = 0.0L;
        prefix_quartic_[0] = 0.0L;
        for (std::size_t k = 0; k < starts; ++k) {
            prefix_sq_[k + 1] = prefix_sq_[k] + static_cast<long double>(d2[order[k]]);
            prefix_quartic_[k + 1] = prefix_quartic_[k] + static_cast<long double>(d4[order[k]]);
        }
    } else {
        d2_ = std::move(d2);
        d4_ = std::move(d4);
    }
}

NeighborEngine::Window NeighborEngine::query(double level) const {
    const double lo = level - eps_;
    const double hi = level + eps_;
    Window w;
    if (engine_ == Engine::fast) {
        const auto first = std::lower_bound(levels_.begin(), levels_.end(), lo);
        const auto last = std::upper_bound(first, levels_.end(), hi);
        const std::size_t a = static_cast<std::size_t>(first - levels_.begin());
        const std::size_t b = static_cast<std::size_t>(last - levels_.begin());
        w.count = static_cast<long>(b - a);
        w.sum_sq = static_cast<double>(prefix_sq_[b] - prefix_sq_[a]);
        w.sum_quartic = static_cast<double>(prefix_quartic_[b] - prefix_quartic_[a]);
    } else {
        long double s2 = 0.0L, s4 = 0.0L;
        for (std::size_t j = 0; j < levels_.size(); ++j) {
            if (levels_[j] >= lo && levels_[j] <= hi) {
                ++w.count;
                s2 += d2_[j];
                s4 += d4_[j];
            }
        }
        w.sum_sq = static_cast<double>(s2);
        w.sum_quartic = static_cast<double>(s4);
    }
    return w;
}

double local_time_hat(const SamplePath& path, const KernelSpec& kernel, double h, double x) {
    validate_path(path);
    if (!(h > 0.0)) throw std::invalid_argument("local_time_hat: h must be positive");
    long double acc = 0.0L;
    for (std::size_t i = 1; i < path.values.size(); ++i)
        acc += kernel.evaluate((path.values[i] - x) / h);
    return static_cast<double>(acc * path.delta / h);
}

std::vector<double> default_grid(const SamplePath& path, int points) {
    validate_path(path);
    if (points < 1) throw std::invalid_argument("default_grid: points must be >= 1");
    std::vector<double> sorted = path.values;
    std::sort(sorted.begin(), sorted.end());
    const double lo = percentile(sorted, 0.05);
    const double hi = percentile(sorted, 0.95);
    std::vector<double> grid(points);
    if (points == 1) {
        grid[0] = 0.5 * (lo + hi);
        return grid;
    }
    for (int g = 0; g < points; ++g) grid[g] = lo + (hi - lo) * g / (points - 1);
    return grid;
}

EstimatorConfig resolve_config(const SamplePath& path, EstimatorConfig config) {
    validate_path(path);
    kernel_by_name(config.kernel);  // reject unknown names early
    const double sd = sample_sd(path.values);
    const double scale = sd > 0.0 ? sd : 1.0;
    const double n = static_cast<double>(path.n);
    if (!(config.eps > 0.0)) config.eps = scale * std::pow(n, -1.0 / 6.0);
    if (!(config.h > 0.0)) config.h = 0.5 * scale * std::pow(n, -0.25);
    if (config.grid.empty()) config.grid = default_grid(path);
    if (config.min_local_time < 0.0) {
        const double k0 = kernel_by_name(config.kernel).evaluate(0.0);
        config.min_local_time = 10.0 * path.delta * k0 / config.h;
    }
    return config;
}

std::vector<MomentEstimate> double_smoothed_moments(const SamplePath& path,
                                                    const EstimatorConfig& raw) {
    const EstimatorConfig config = resolve_config(path, raw);
    validate_grid(config.grid);
    const KernelSpec& kernel = kernel_by_name(config.kernel);
    const double h = config.h;
    const double radius = h * kernel.support_radius;
    const double delta = path.delta;

    NeighborEngine engine(path, config.eps, config.engine);
    OuterLevels outer(path, config.engine);

    std::vector<MomentEstimate> out(config.grid.size());
    std::vector<long> counts;
    for (std::size_t g = 0; g < config.grid.size(); ++g) {
        const double x = config.grid[g];
        long double num2 = 0.0L, num4 = 0.0L, den = 0.0L, ksum = 0.0L;
        counts.clear();
        outer.for_each_in(x - radius, x + radius, [&](double level) {
            const double kw = kernel.evaluate((level - x) / h);
            ksum += kw;
            if (kw <= 0.0) return;
            const NeighborEngine::Window w = engine.query(level);
            if (w.count == 0) return;  // no usable increments at this level
            const long double share = static_cast<long double>(kw) / (w.count * delta);
            num2 += share * w.sum_sq;
            num4 += share * w.sum_quartic;
            den += kw;
            counts.push_back(w.count);
        });

        MomentEstimate& est = out[g];
        est.x = x;
        est.local_time = static_cast<double>(ksum * delta / h);
        est.neighbor_stats = summarize_counts(counts);
        est.reliable = den > 0.0L && est.local_time >= config.min_local_time;
        if (est.reliable) {
            est.m2 = static_cast<double>(num2 / den);
            est.m4 = static_cast<double>(num4 / den);
        } else {
            est.m2 = nan_value;
            est.m4 = nan_value;
        }
    }
    return out;
}

std::vector<SingleSmoothedPoint> single_smoothed_m2(const SamplePath& path,
                                                    const KernelSpec& kernel, double h,
                                                    const std::vector<double>& grid) {
    validate_path(path);
    validate_grid(grid);
    if (!(h > 0.0)) throw std::invalid_argument("single_smoothed_m2: h must be positive");
    const double delta = path.delta;
    // Levels 1..n-1 carry their own forward increment; the sums run over those.
    std::vector<SingleSmoothedPoint> out(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double x = grid[g];
        long double num = 0.0L, den = 0.0L;
        for (std::size_t i = 1; i + 1 < path.values.size(); ++i) {
            const double kw = kernel.evaluate((path.values[i] - x) / h);
            if (kw <= 0.0) continue;
            const double d = path.values[i + 1] - path.values[i];
            num += static_cast<long double>(kw) * d * d;
            den += kw;
        }
        SingleSmoothedPoint& p = out[g];
        p.x = x;
        p.local_time = local_time_hat(path, kernel, h, x);
        p.reliable = den > 0.0L;
        p.m2 = p.reliable ? static_cast<double>(num / (den * delta)) : nan_value;
    }
    return out;
}

}  // namespace jdvol
