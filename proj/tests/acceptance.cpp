#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "jdvol/estimators.hpp"
#include "jdvol/io.hpp"
#include "jdvol/kernels.hpp"
#include "jdvol/mc.hpp"
#include "jdvol/model.hpp"

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string plans_dir() {
    if (const char* env = std::getenv("JDVOL_PLANS_DIR")) return env;
    return JDVOL_DEFAULT_PLANS_DIR;
}

jdvol::ExperimentReport run_plan(const std::string& name) {
    const jdvol::ExperimentPlan plan =
        jdvol::parse_plan_file(plans_dir() + "/" + name);
    return plan.regime == jdvol::PlanRegime::bn_comparison ? jdvol::compare_with_bn(plan)
                                                           : jdvol::run_experiment(plan);
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) { return jdvol::format_double(v); }

double draw_kernel(const jdvol::KernelSpec& k, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ux(-k.support_radius, k.support_radius);
    std::uniform_real_distribution<double> uy(0.0, k.evaluate(0.0));
    for (;;) {
        const double x = ux(rng);
        if (uy(rng) <= k.evaluate(x)) return x;
    }
}

struct McTheta {
    double value = 0.0;
    double se = 0.0;
};

// Rejection-sampled oracle for the overlap constant: theta equals
// zmax * P(a uniform level lands within 1 of both scaled kernel draws).
McTheta mc_theta(const jdvol::KernelSpec& k, double phi, long draws,
                 unsigned long long seed) {
    std::mt19937_64 rng(seed);
    const double zmax = 1.0 + phi * k.support_radius;
    std::uniform_real_distribution<double> uz(-zmax, zmax);
    long hits = 0;
    for (long i = 0; i < draws; ++i) {
        const double a = phi * draw_kernel(k, rng);
        const double e = phi * draw_kernel(k, rng);
        const double z = uz(rng);
        if (std::abs(z - a) <= 1.0 && std::abs(z - e) <= 1.0) ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(draws);
    return {zmax * p, zmax * std::sqrt(p * (1.0 - p) / static_cast<double>(draws))};
}

jdvol::SamplePath sim_ou_jump(long n, double delta, unsigned long long seed) {
    jdvol::SimConfig cfg;
    cfg.n = n;
    cfg.delta = delta;
    cfg.seed = seed;
    return jdvol::simulate_path(jdvol::builtin_model("ou-jump"), cfg);
}

jdvol::EstimatorConfig fixed_config(double h, double eps, std::vector<double> grid) {
    jdvol::EstimatorConfig cfg;
    cfg.h = h;
    cfg.eps = eps;
    cfg.grid = std::move(grid);
    cfg.min_local_time = 0.0;
    return cfg;
}

}  // namespace

int main() {
    // 1: median relative error of the estimate at the center under default
    //    per-path bandwidths, 100 replications, within the runtime budget.
    {
        const auto start = Clock::now();
        const jdvol::ExperimentReport rep = run_plan("moment_recovery.plan");
        const double elapsed = seconds_since(start);
        const double med = rep.per_rung.at(0).median_abs_rel_err;
        report(1, med < 0.10 && elapsed < 300.0,
               "median relative error " + fmt(med) + " (< 0.1), " + fmt(elapsed) +
                   "s (< 300s)");
    }

    // 2 and 4: strictly decreasing RMSE along the ladder; log-log error rate
    //    against the window mass near -1/2.
    {
        const jdvol::ExperimentReport rep = run_plan("consistency_ladder.plan");
        bool decreasing = rep.per_rung.size() == 3;
        std::string rmses;
        for (std::size_t r = 0; r < rep.per_rung.size(); ++r) {
            if (r > 0 && !(rep.per_rung[r].rmse < rep.per_rung[r - 1].rmse))
                decreasing = false;
            rmses += (r ? ", " : "") + fmt(rep.per_rung[r].rmse);
        }
        report(2, decreasing, "rmse along the ladder: " + rmses);

        const double slope = rep.has_rate_fit ? rep.rate_fit.slope : 0.0;
        report(4, rep.has_rate_fit && slope > -0.65 && slope < -0.35,
               "fitted error rate " + fmt(slope) + " (within [-0.65, -0.35])");
    }

    // 3 and 7: standardized errors at the largest scale pass the normality
    //    test; bias-corrected intervals cover near the nominal rate.
    {
        const jdvol::ExperimentReport rep = run_plan("normality.plan");
        const jdvol::RungReport& rung = rep.per_rung.back();
        report(3, rung.ks_p > 0.01,
               "ks p-value " + fmt(rung.ks_p) + " (> 0.01), statistic " +
                   fmt(rung.ks_stat));
        report(7, rung.coverage >= 0.90 && rung.coverage <= 0.98,
               "interval coverage " + fmt(rung.coverage) + " (within [0.90, 0.98])");
    }

    // 5: overlap constant limits and Monte Carlo agreement.
    {
        bool pass = true;
        std::string detail;
        for (const char* name : {"epanechnikov", "quartic"}) {
            const jdvol::KernelSpec& k = jdvol::kernel_by_name(name);
            const double limit_gap = std::abs(jdvol::theta_phi(k, 1e-4) - 1.0);
            if (!(limit_gap < 1e-3)) pass = false;
            unsigned long long seed = 1000;
            for (double phi : {0.5, 1.0, 2.0}) {
                const McTheta mc = mc_theta(k, phi, 10000000, ++seed);
                const double gap = std::abs(jdvol::theta_phi(k, phi) - mc.value);
                if (!(gap <= 3.0 * mc.se)) {
                    pass = false;
                    detail += " [" + std::string(name) + " phi=" + fmt(phi) +
                              " off by " + fmt(gap / mc.se) + " se]";
                }
            }
        }
        report(5, pass, "small-ratio limit within 1e-3; quadrature within 3 se of a 1e7-draw"
                        " oracle at ratios 0.5, 1, 2" + detail);
    }

    // 6: engine equivalence on random paths and the large-sample time budget.
    {
        bool agree = true;
        std::mt19937_64 rng(2024);
        std::uniform_int_distribution<long> un(100, 10000);
        std::uniform_real_distribution<double> ueps(0.005, 0.6);
        std::uniform_real_distribution<double> ux(-1.5, 1.5);
        for (int rep = 0; rep < 200 && agree; ++rep) {
            const jdvol::SamplePath path = sim_ou_jump(un(rng), 0.01, 3000 + rep);
            const double eps = ueps(rng);
            const jdvol::NeighborEngine fast(path, eps, jdvol::Engine::fast);
            const jdvol::NeighborEngine naive(path, eps, jdvol::Engine::naive);
            for (int q = 0; q < 50; ++q) {
                const double level = ux(rng);
                const auto a = fast.query(level);
                const auto b = naive.query(level);
                const double tol2 = 1e-12 * std::max(1.0, std::abs(b.sum_sq));
                const double tol4 = 1e-12 * std::max(1.0, std::abs(b.sum_quartic));
                if (a.count != b.count || std::abs(a.sum_sq - b.sum_sq) > tol2 ||
                    std::abs(a.sum_quartic - b.sum_quartic) > tol4) {
                    agree = false;
                    break;
                }
            }
        }

        const jdvol::SamplePath big = sim_ou_jump(1000000, 0.002, 808);
        const auto start = Clock::now();
        const jdvol::EstimatorConfig cfg =
            jdvol::resolve_config(big, jdvol::EstimatorConfig{});
        const std::vector<jdvol::MomentEstimate> est =
            jdvol::double_smoothed_moments(big, cfg);
        const double elapsed = seconds_since(start);
        long reliable = 0;
        for (const auto& e : est) reliable += e.reliable ? 1 : 0;
        report(6, agree && est.size() == 25 && reliable > 0 && elapsed < 10.0,
               std::string("engines agree on 200 paths: ") + (agree ? "yes" : "no") +
                   "; 25-point grid on n=1e6 in " + fmt(elapsed) + "s (< 10s)");
    }

    // 8: double smoothing beats the single-smoothed benchmark when tuned and
    //    matches it when the window degenerates.
    {
        const jdvol::ExperimentReport tuned = run_plan("bn_tuned.plan");
        const double r1 = tuned.comparison.ratio;
        const jdvol::ExperimentReport degen = run_plan("bn_degenerate.plan");
        const double r2 = degen.comparison.ratio;
        const bool pass = tuned.has_comparison && r1 < 1.0 && degen.has_comparison &&
                          r2 > 0.95 && r2 < 1.05;
        report(8, pass, "tuned error ratio " + fmt(r1) + " (< 1); degenerate ratio " +
                            fmt(r2) + " (within [0.95, 1.05])");
    }

    // 9: occupation-time estimate against the long-run histogram at the mode.
    {
        const jdvol::KernelSpec& epan = jdvol::kernel_by_name("epanechnikov");
        std::vector<double> per_rep;
        for (unsigned long long seed = 1; seed <= 50; ++seed) {
            const jdvol::SamplePath path = sim_ou_jump(50000, 0.01, seed);
            const double horizon = path.n * path.delta;
            per_rep.push_back(jdvol::local_time_hat(path, epan, 0.05, 0.0) / horizon);
        }
        std::sort(per_rep.begin(), per_rep.end());
        const double median = per_rep[per_rep.size() / 2];

        const jdvol::SamplePath long_path = sim_ou_jump(500000, 0.01, 424242);
        const double width = 0.05;
        long inside = 0;
        for (long i = 1; i <= long_path.n; ++i)
            if (std::abs(long_path.values[i]) <= width) ++inside;
        const double histogram =
            inside * long_path.delta / (2.0 * width) / (long_path.n * long_path.delta);
        const double gap = std::abs(median / histogram - 1.0);
        report(9, gap < 0.10, "median occupation estimate " + fmt(median) +
                                  " vs long-run histogram " + fmt(histogram) +
                                  ", relative gap " + fmt(gap) + " (< 0.1)");
    }

    // 10: translation and scale equivariance across replicated paths.
    {
        bool pass = true;
        std::string detail = "translation within 1e-12, scaling within 1e-10";
        const std::vector<double> grid = {-0.3, 0.0, 0.3};
        for (unsigned long long seed = 1; seed <= 100 && pass; ++seed) {
            const jdvol::SamplePath path = sim_ou_jump(2000, 0.01, seed);
            const auto base =
                jdvol::double_smoothed_moments(path, fixed_config(0.15, 0.2, grid));

            const double shift = 3.7;
            jdvol::SamplePath moved = path;
            for (double& v : moved.values) v += shift;
            std::vector<double> moved_grid = grid;
            for (double& x : moved_grid) x += shift;
            const auto trans = jdvol::double_smoothed_moments(
                moved, fixed_config(0.15, 0.2, moved_grid));

            const double a = 2.5;
            jdvol::SamplePath scaled = path;
            for (double& v : scaled.values) v *= a;
            std::vector<double> scaled_grid = grid;
            for (double& x : scaled_grid) x *= a;
            const auto scal = jdvol::double_smoothed_moments(
                scaled, fixed_config(0.15 * a, 0.2 * a, scaled_grid));

            for (std::size_t g = 0; g < grid.size() && pass; ++g) {
                if (!base[g].reliable || !trans[g].reliable || !scal[g].reliable) {
                    pass = false;
                    detail = "grid point lost reliability under transformation";
                    break;
                }
                auto rel = [](double got, double want) {
                    return std::abs(got - want) / std::max(1e-300, std::abs(want));
                };
                if (rel(trans[g].m2, base[g].m2) > 1e-12 ||
                    rel(trans[g].m4, base[g].m4) > 1e-12 ||
                    rel(trans[g].local_time, base[g].local_time) > 1e-12) {
                    pass = false;
                    detail = "translation mismatch at seed " + std::to_string(seed);
                }
                if (rel(scal[g].m2, a * a * base[g].m2) > 1e-10 ||
                    rel(scal[g].m4, a * a * a * a * base[g].m4) > 1e-10 ||
                    rel(scal[g].local_time, base[g].local_time / a) > 1e-10) {
                    pass = false;
                    detail = "scaling mismatch at seed " + std::to_string(seed);
                }
            }
        }
        report(10, pass, detail);
    }

    std::printf("acceptance: %d/10 criteria passed\n", 10 - failures);
    return failures;
}
