#pragma once

#include <string>
#include <vector>

#include "jdvol/kernels.hpp"
#include "jdvol/model.hpp"

namespace jdvol {

enum class Engine { fast, naive };

struct EstimatorConfig {
    double h = 0.0;    // kernel bandwidth; <= 0 resolves to the default rule
    double eps = 0.0;  // neighborhood half-width; <= 0 resolves to the default rule
    std::string kernel = "epanechnikov";
    std::vector<double> grid;         // empty resolves to the default grid
    Engine engine = Engine::fast;
    double min_local_time = -1.0;     // < 0 resolves to 10 * delta * K(0) / h
};

struct NeighborCountStats {
    long min = 0;
    long median = 0;
    long max = 0;
};

struct MomentEstimate {
    double x = 0.0;
    double m2 = 0.0;
    double m4 = 0.0;
    double local_time = 0.0;
    bool reliable = false;
    NeighborCountStats neighbor_stats;  // over the points that entered the sums
};

struct SingleSmoothedPoint {
    double x = 0.0;
    double m2 = 0.0;
    double local_time = 0.0;
    bool reliable = false;
};

// Indicator-window statistics over the path's increments: for a query level v,
// the count of increment start points within eps of v and the sums of squared
// and fourth-power increments over those starts. Both engines share the exact
// comparison bounds, so counts agree exactly; sums agree to float reassociation.
class NeighborEngine {
public:
    struct Window {
        long count = 0;
        double sum_sq = 0.0;
        double sum_quartic = 0.0;
    };

    NeighborEngine(const SamplePath& path, double eps, Engine engine);
    Window query(double level) const;

private:
    double eps_;
    Engine engine_;
    std::vector<double> levels_;            // fast: sorted increment-start levels
    std::vector<long double> prefix_sq_;    // fast: prefix sums aligned to levels_
    std::vector<long double> prefix_quartic_;
    std::vector<double> d2_, d4_;           // naive: per-start increment powers
};

// Rejects paths with fewer than 2 increments, a size/n mismatch, nonpositive
// delta, or non-finite values.
void validate_path(const SamplePath& path);

// Occupation-density estimate (delta/h) * sum over i=1..n of K((X_i - x)/h).
double local_time_hat(const SamplePath& path, const KernelSpec& kernel, double h, double x);

// Fills defaulted fields: bandwidths from the sample-scale rules
// eps = sd * n^(-1/6), h = 0.5 * sd * n^(-1/4) (heuristic starting points, not
// theory-optimal), a 25-point grid between the 5th and 95th percentiles, and
// the minimum-local-time floor.
EstimatorConfig resolve_config(const SamplePath& path, EstimatorConfig config);

std::vector<double> default_grid(const SamplePath& path, int points = 25);

// Double-smoothed conditional moment estimates at each grid point: kernel
// average over observation levels of the eps-neighborhood mean squared (and
// fourth-power) increment per unit time. Points whose kernel mass or local
// time is too thin come back with reliable=false and NaN moments.
std::vector<MomentEstimate> double_smoothed_moments(const SamplePath& path,
                                                    const EstimatorConfig& config);

// Single-smoothed benchmark: kernel-weighted squared-increment regression.
std::vector<SingleSmoothedPoint> single_smoothed_m2(const SamplePath& path,
                                                    const KernelSpec& kernel, double h,
                                                    const std::vector<double>& grid);

}
