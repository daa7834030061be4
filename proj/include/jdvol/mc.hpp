#pragma once

#include <map>
#include <string>
#include <vector>

#include "jdvol/inference.hpp"
#include "jdvol/model.hpp"

namespace jdvol {

struct LadderRung {
    long n = 0;
    double delta = 0.0;
};

enum class BandwidthMode {
    power,        // eps = eps_c * n^(-eps_pow), h = h_c * eps^h_pow
    path_default  // per-path sd rules, same as the estimator defaults
};

struct BandwidthRule {
    BandwidthMode mode = BandwidthMode::power;
    double eps_c = 1.0;
    double eps_pow = 1.0 / 6.0;
    double h_c = 0.5;
    double h_pow = 1.5;
    // Benchmark single-smoothed bandwidth: bn_h_c * n^(-bn_h_pow), or the
    // per-path rule of thumb when bn_h_c <= 0.
    double bn_h_c = 0.0;
    double bn_h_pow = 0.2;
    bool h_match_bn = false;  // comparison runs: double estimator reuses the benchmark h
};

enum class PlanRegime { small_h, ratio_h, stationary, bn_comparison };

struct ExperimentPlan {
    std::string name = "experiment";
    std::string model = "ou-jump";
    std::map<std::string, double> model_params;
    std::vector<LadderRung> ladder;
    BandwidthRule bandwidth;
    long replications = 100;
    double x = 0.0;
    double x0 = 0.0;
    unsigned long long seed_base = 1;
    PlanRegime regime = PlanRegime::small_h;
    double phi = 1.0;
    std::string kernel = "epanechnikov";
    int substeps = 10;
    double alpha = 0.05;
    // Reuse one simulated path per replication across rungs (prefixes);
    // requires a common delta and ascending n.
    bool share_paths = false;
    // Exponent of the eps^q * L_hat boundedness diagnostic.
    double eps_power_diag = 5.0;
};

struct RungReport {
    long n = 0;
    double delta = 0.0;
    double eps = 0.0;  // power mode: exact; path_default mode: mean over reps
    double h = 0.0;
    double bias = 0.0;
    double sd = 0.0;
    double rmse = 0.0;
    double median_abs_rel_err = 0.0;
    double mean_local_time = 0.0;
    double ks_stat = 0.0;
    double ks_p = 0.0;
    double coverage = 0.0;
    double eps_diag_mean = 0.0;    // mean of eps^q * L_hat
    double modulus_median = 0.0;   // path_modulus_diagnostic median
    long unreliable_reps = 0;
};

struct RateFit {
    double slope = 0.0;
    double std_error = 0.0;
    double intercept = 0.0;
};

struct ComparisonReport {
    double mse_double = 0.0;
    double mse_single = 0.0;
    double ratio = 0.0;  // double / single
};

struct ExperimentReport {
    ExperimentPlan plan;
    double target_m2 = 0.0;
    double target_m4 = 0.0;
    double theta = 1.0;
    double bias_const = 0.0;
    std::vector<RungReport> per_rung;
    bool has_rate_fit = false;
    RateFit rate_fit;
    bool has_comparison = false;
    ComparisonReport comparison;
    bool eps_diag_warning = false;  // eps^q * L_hat grew along the ladder
};

// Throws std::invalid_argument describing the first violated plan constraint.
void validate_plan(const ExperimentPlan& plan);

// Simulates replications per rung (seeds seed_base + r), estimates m2 at
// plan.x, standardizes errors with the analytic targets, and aggregates
// bias/sd/RMSE, KS normality, CI coverage, and the rate regression across
// rungs. Deterministic for a fixed plan regardless of thread count.
ExperimentReport run_experiment(const ExperimentPlan& plan);

// Runs the double-smoothed and single-smoothed estimators on identical paths
// (one rung) and reports both MSEs at plan.x and their ratio.
ExperimentReport compare_with_bn(const ExperimentPlan& plan);

// max |increment| / sqrt(delta * log(1/delta)); the log is floored at 1 so
// the statistic stays defined for coarse spacings.
double path_modulus_diagnostic(const SamplePath& path);

}
