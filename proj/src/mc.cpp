#include "jdvol/mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "jdvol/errors.hpp"
#include "jdvol/estimators.hpp"
#include "jdvol/parallel.hpp"
#include "jdvol/stats.hpp"

namespace jdvol {
namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

struct RepOutcome {
    bool ok = false;
    double m2 = nan_value;
    double m4 = nan_value;
    double local_time = nan_value;
    double eps = nan_value;
    double h = nan_value;
    double z = nan_value;  // standardized error
    bool covered = false;
    double modulus = nan_value;
};

struct Targets {
    double m2 = 0.0;
    double m4 = 0.0;
    double gamma = 0.0;
    double theta = 1.0;
    Regime ci_regime = Regime::small_h;
};

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return nan_value;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
    if (v.empty()) return nan_value;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    if (v.size() % 2 == 1) return v[mid];
    return 0.5 * (v[mid - 1] + v[mid]);
}

Regime ci_regime_of(PlanRegime regime) {
    switch (regime) {
        case PlanRegime::ratio_h: return Regime::ratio_h;
        case PlanRegime::stationary: return Regime::stationary;
        default: return Regime::small_h;
    }
}

struct Bandwidths {
    double eps = 0.0;
    double h = 0.0;
};

Bandwidths power_bandwidths(const BandwidthRule& rule, long n) {
    Bandwidths bw;
    bw.eps = rule.eps_c * std::pow(static_cast<double>(n), -rule.eps_pow);
    bw.h = rule.h_c * std::pow(bw.eps, rule.h_pow);
    return bw;
}

Bandwidths resolve_bandwidths(const BandwidthRule& rule, const SamplePath& path) {
    if (rule.mode == BandwidthMode::power) return power_bandwidths(rule, path.n);
    EstimatorConfig cfg;
    cfg = resolve_config(path, cfg);
    return {cfg.eps, cfg.h};
}

RepOutcome evaluate_rep(const SamplePath& path, const ExperimentPlan& plan,
                        const Bandwidths& bw, const Targets& targets) {
    RepOutcome out;
    out.eps = bw.eps;
    out.h = bw.h;
    out.modulus = path_modulus_diagnostic(path);

    EstimatorConfig cfg;
    cfg.h = bw.h;
    cfg.eps = bw.eps;
    cfg.kernel = plan.kernel;
    cfg.grid = {plan.x};
    cfg.engine = Engine::fast;
    cfg.min_local_time = 0.0;
    const MomentEstimate est = double_smoothed_moments(path, cfg).front();
    out.m2 = est.m2;
    out.m4 = est.m4;
    out.local_time = est.local_time;
    out.ok = est.reliable && std::isfinite(est.m2) && est.local_time > 0.0;
    if (!out.ok) return out;

    const double centered = out.m2 - targets.m2 - bw.eps * bw.eps * targets.gamma;
    if (targets.m4 > 0.0) {
        out.z = std::sqrt(bw.eps * out.local_time) * centered /
                std::sqrt(0.5 * targets.theta * targets.m4);
    }
    const InferenceResult ci =
        confidence_interval(out.m2, out.m4, targets.gamma, bw.eps, out.local_time,
                            plan.alpha, targets.ci_regime, targets.theta);
    out.covered = ci.ci_low <= targets.m2 && targets.m2 <= ci.ci_high;
    return out;
}

RungReport aggregate_rung(const LadderRung& rung, const std::vector<RepOutcome>& reps,
                          const ExperimentPlan& plan, const Targets& targets) {
    RungReport rep;
    rep.n = rung.n;
    rep.delta = rung.delta;

    std::vector<double> m2s, local_times, zs, abs_rel, diag, moduli, epss, hs;
    long covered = 0;
    for (const RepOutcome& r : reps) {
        moduli.push_back(r.modulus);
        if (!r.ok) continue;
        m2s.push_back(r.m2);
        local_times.push_back(r.local_time);
        epss.push_back(r.eps);
        hs.push_back(r.h);
        if (std::isfinite(r.z)) zs.push_back(r.z);
        const double err = std::abs(r.m2 - targets.m2);
        abs_rel.push_back(targets.m2 != 0.0 ? err / std::abs(targets.m2) : err);
        diag.push_back(std::pow(r.eps, plan.eps_power_diag) * r.local_time);
        if (r.covered) ++covered;
    }
    rep.unreliable_reps = static_cast<long>(reps.size() - m2s.size());

    if (plan.bandwidth.mode == BandwidthMode::power && !plan.bandwidth.h_match_bn) {
        const Bandwidths bw = power_bandwidths(plan.bandwidth, rung.n);
        rep.eps = bw.eps;
        rep.h = bw.h;
    } else {
        rep.eps = mean_of(epss);
        rep.h = mean_of(hs);
    }

    const double mean_m2 = mean_of(m2s);
    rep.bias = m2s.empty() ? nan_value : mean_m2 - targets.m2;
    double var = 0.0;
    for (double v : m2s) var += (v - mean_m2) * (v - mean_m2);
    rep.sd = m2s.empty() ? nan_value : std::sqrt(var / static_cast<double>(m2s.size()));
    rep.rmse = std::sqrt(rep.bias * rep.bias + rep.sd * rep.sd);
    rep.median_abs_rel_err = median_of(abs_rel);
    rep.mean_local_time = mean_of(local_times);
    rep.eps_diag_mean = mean_of(diag);
    rep.modulus_median = median_of(moduli);
    rep.coverage = static_cast<double>(covered) / static_cast<double>(reps.size());

    if (zs.size() >= 2) {
        const KsResult ks = ks_test_standard_normal(zs);
        rep.ks_stat = ks.statistic;
        rep.ks_p = ks.p_value;
    } else {
        rep.ks_stat = nan_value;
        rep.ks_p = nan_value;
    }
    return rep;
}

Targets make_targets(const ExperimentPlan& plan, const ModelSpec& model,
                     const KernelSpec& kernel) {
    Targets t;
    try {
        t.m2 = model.m2(plan.x);
        t.m4 = model.m4(plan.x);
    } catch (const std::exception& e) {
        throw std::invalid_argument(
            std::string("experiment: model lacks analytic moment ground truth (") +
            e.what() + "); supply jump_size_moment");
    }
    t.ci_regime = ci_regime_of(plan.regime);
    t.theta = plan.regime == PlanRegime::ratio_h ? theta_phi(kernel, plan.phi) : 1.0;

    BiasInputs inputs;
    inputs.m2_d1 = model.m2_deriv1 ? model.m2_deriv1(plan.x) : 0.0;
    inputs.m2_d2 = model.m2_deriv2 ? model.m2_deriv2(plan.x) : 0.0;
    inputs.score = model.stationary_score ? model.stationary_score(plan.x) : 0.0;
    t.gamma = plan.regime == PlanRegime::ratio_h
                  ? bias_constant(inputs, Regime::ratio_h, kernel, plan.phi)
                  : bias_constant(inputs, Regime::small_h, kernel);
    return t;
}

SamplePath prefix_path(const SamplePath& full, long n) {
    SamplePath p;
    p.delta = full.delta;
    p.n = n;
    p.values.assign(full.values.begin(), full.values.begin() + n + 1);
    return p;
}

void fit_rate(ExperimentReport& report) {
    std::vector<double> xs, ys;
    for (const RungReport& r : report.per_rung) {
        if (r.rmse > 0.0 && std::isfinite(r.rmse) && r.mean_local_time > 0.0 &&
            r.eps > 0.0) {
            xs.push_back(std::log(r.eps * r.mean_local_time));
            ys.push_back(std::log(r.rmse));
        }
    }
    if (xs.size() < 2) return;
    const double xbar = mean_of(xs);
    const double ybar = mean_of(ys);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += (xs[k] - xbar) * (xs[k] - xbar);
        sxy += (xs[k] - xbar) * (ys[k] - ybar);
    }
    if (!(sxx > 0.0)) return;
    report.rate_fit.slope = sxy / sxx;
    report.rate_fit.intercept = ybar - report.rate_fit.slope * xbar;
    if (xs.size() > 2) {
        double ssr = 0.0;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const double fit = report.rate_fit.intercept + report.rate_fit.slope * xs[k];
            ssr += (ys[k] - fit) * (ys[k] - fit);
        }
        report.rate_fit.std_error =
            std::sqrt(ssr / static_cast<double>(xs.size() - 2) / sxx);
    } else {
        report.rate_fit.std_error = nan_value;
    }
    report.has_rate_fit = true;
}

void flag_diag_growth(ExperimentReport& report) {
    const auto& rungs = report.per_rung;
    if (rungs.size() < 2) return;
    bool increasing = true;
    for (std::size_t k = 1; k < rungs.size(); ++k) {
        if (!(std::isfinite(rungs[k].eps_diag_mean) &&
              rungs[k].eps_diag_mean > rungs[k - 1].eps_diag_mean)) {
            increasing = false;
            break;
        }
    }
    report.eps_diag_warning =
        increasing && rungs.back().eps_diag_mean > 1.5 * rungs.front().eps_diag_mean;
}

}  // namespace

void validate_plan(const ExperimentPlan& plan) {
    if (plan.ladder.empty()) throw std::invalid_argument("plan: ladder must be nonempty");
    for (const LadderRung& rung : plan.ladder) {
        if (rung.n < 2) throw std::invalid_argument("plan: each rung needs n >= 2");
        if (!(rung.delta > 0.0)) throw std::invalid_argument("plan: rung delta must be positive");
    }
    if (plan.replications < 1) throw std::invalid_argument("plan: replications must be >= 1");
    if (plan.substeps < 1) throw std::invalid_argument("plan: substeps must be >= 1");
    if (!(plan.alpha > 0.0 && plan.alpha < 1.0))
        throw std::invalid_argument("plan: alpha must lie in (0, 1)");
    kernel_by_name(plan.kernel);
    if ((plan.regime == PlanRegime::ratio_h || plan.regime == PlanRegime::bn_comparison) &&
        !(plan.phi > 0.0))
        throw std::invalid_argument("plan: this regime requires phi > 0");
    if (plan.regime == PlanRegime::bn_comparison && plan.ladder.size() != 1)
        throw std::invalid_argument("plan: bn_comparison uses exactly one rung");
    if (plan.bandwidth.h_match_bn && plan.regime != PlanRegime::bn_comparison)
        throw std::invalid_argument("plan: h_match_bn only applies to bn_comparison");
    if (plan.share_paths) {
        for (std::size_t k = 1; k < plan.ladder.size(); ++k) {
            if (plan.ladder[k].delta != plan.ladder[0].delta)
                throw std::invalid_argument("plan: share_paths requires a common delta");
            if (plan.ladder[k].n < plan.ladder[k - 1].n)
                throw std::invalid_argument("plan: share_paths requires ascending n");
        }
    }
    if (plan.bandwidth.mode == BandwidthMode::power) {
        if (!(plan.bandwidth.eps_c > 0.0))
            throw std::invalid_argument("plan: eps_c must be positive");
        if (!(plan.bandwidth.h_c > 0.0) && !plan.bandwidth.h_match_bn)
            throw std::invalid_argument("plan: h_c must be positive");
        if (plan.ladder.size() > 1) {
            // The schedule must send both bandwidths to zero along the ladder,
            // and h faster than eps in the small_h regime.
            for (std::size_t k = 1; k < plan.ladder.size(); ++k) {
                if (plan.ladder[k].n <= plan.ladder[k - 1].n)
                    throw std::invalid_argument("plan: multi-rung ladders need strictly increasing n");
            }
            if (!(plan.bandwidth.eps_pow > 0.0))
                throw std::invalid_argument("plan: eps_pow must be positive on a ladder");
            if (!(plan.bandwidth.h_pow > 0.0))
                throw std::invalid_argument("plan: h_pow must be positive on a ladder");
            if (plan.regime == PlanRegime::small_h && !(plan.bandwidth.h_pow > 1.0))
                throw std::invalid_argument(
                    "plan: small_h ladders need h_pow > 1 so h/eps -> 0");
        }
    } else if (plan.regime == PlanRegime::ratio_h) {
        throw std::invalid_argument("plan: ratio_h requires the power bandwidth rule");
    }
}

ExperimentReport run_experiment(const ExperimentPlan& plan) {
    validate_plan(plan);
    if (plan.regime == PlanRegime::bn_comparison)
        throw std::invalid_argument("run_experiment: use compare_with_bn for bn_comparison plans");

    const ModelSpec model = builtin_model(plan.model, plan.model_params);
    const KernelSpec& kernel = kernel_by_name(plan.kernel);
    const Targets targets = make_targets(plan, model, kernel);

    const std::size_t rungs = plan.ladder.size();
    const std::size_t reps = static_cast<std::size_t>(plan.replications);
    std::vector<std::vector<RepOutcome>> slots(rungs, std::vector<RepOutcome>(reps));

    parallel_for(reps, [&](std::size_t r) {
        const unsigned long long seed = plan.seed_base + r;
        if (plan.share_paths) {
            SimConfig sim;
            sim.x0 = plan.x0;
            sim.n = plan.ladder.back().n;
            sim.delta = plan.ladder.back().delta;
            sim.substeps = plan.substeps;
            sim.seed = seed;
            const SamplePath full = simulate_path(model, sim);
            for (std::size_t k = 0; k < rungs; ++k) {
                const SamplePath path = prefix_path(full, plan.ladder[k].n);
                slots[k][r] = evaluate_rep(path, plan, resolve_bandwidths(plan.bandwidth, path),
                                           targets);
            }
        } else {
            for (std::size_t k = 0; k < rungs; ++k) {
                SimConfig sim;
                sim.x0 = plan.x0;
                sim.n = plan.ladder[k].n;
                sim.delta = plan.ladder[k].delta;
                sim.substeps = plan.substeps;
                sim.seed = seed;
                const SamplePath path = simulate_path(model, sim);
                slots[k][r] = evaluate_rep(path, plan, resolve_bandwidths(plan.bandwidth, path),
                                           targets);
            }
        }
    });

    ExperimentReport report;
    report.plan = plan;
    report.target_m2 = targets.m2;
    report.target_m4 = targets.m4;
    report.theta = targets.theta;
    report.bias_const = targets.gamma;
    for (std::size_t k = 0; k < rungs; ++k) {
        report.per_rung.push_back(aggregate_rung(plan.ladder[k], slots[k], plan, targets));
    }
    fit_rate(report);
    flag_diag_growth(report);
    return report;
}

ExperimentReport compare_with_bn(const ExperimentPlan& plan) {
    validate_plan(plan);
    if (plan.regime != PlanRegime::bn_comparison)
        throw std::invalid_argument("compare_with_bn: plan regime must be bn_comparison");

    const ModelSpec model = builtin_model(plan.model, plan.model_params);
    const KernelSpec& kernel = kernel_by_name(plan.kernel);
    Targets targets;
    {
        // Reuse the analytic-target machinery with small_h bookkeeping for the
        // per-rung diagnostics of the double estimator.
        ExperimentPlan diag = plan;
        diag.regime = PlanRegime::small_h;
        targets = make_targets(diag, model, kernel);
    }

    const LadderRung rung = plan.ladder.front();
    const std::size_t reps = static_cast<std::size_t>(plan.replications);
    std::vector<RepOutcome> outcomes(reps);
    std::vector<double> sq_double(reps, nan_value), sq_single(reps, nan_value);

    parallel_for(reps, [&](std::size_t r) {
        SimConfig sim;
        sim.x0 = plan.x0;
        sim.n = rung.n;
        sim.delta = rung.delta;
        sim.substeps = plan.substeps;
        sim.seed = plan.seed_base + r;
        const SamplePath path = simulate_path(model, sim);

        const double h_bn = plan.bandwidth.bn_h_c > 0.0
                                ? plan.bandwidth.bn_h_c *
                                      std::pow(static_cast<double>(rung.n), -plan.bandwidth.bn_h_pow)
                                : rule_of_thumb_bandwidth(path);
        Bandwidths bw = resolve_bandwidths(plan.bandwidth, path);
        if (plan.bandwidth.h_match_bn) bw.h = h_bn;

        outcomes[r] = evaluate_rep(path, plan, bw, targets);
        if (outcomes[r].ok) {
            const double e = outcomes[r].m2 - targets.m2;
            sq_double[r] = e * e;
        }
        const SingleSmoothedPoint bn =
            single_smoothed_m2(path, kernel, h_bn, {plan.x}).front();
        if (bn.reliable && std::isfinite(bn.m2)) {
            const double e = bn.m2 - targets.m2;
            sq_single[r] = e * e;
        }
    });

    ExperimentReport report;
    report.plan = plan;
    report.target_m2 = targets.m2;
    report.target_m4 = targets.m4;
    report.theta = targets.theta;
    report.bias_const = targets.gamma;
    report.per_rung.push_back(aggregate_rung(rung, outcomes, plan, targets));

    std::vector<double> d, s;
    for (std::size_t r = 0; r < reps; ++r) {
        if (std::isfinite(sq_double[r])) d.push_back(sq_double[r]);
        if (std::isfinite(sq_single[r])) s.push_back(sq_single[r]);
    }
    report.comparison.mse_double = mean_of(d);
    report.comparison.mse_single = mean_of(s);
    report.comparison.ratio = report.comparison.mse_double / report.comparison.mse_single;
    report.has_comparison = true;
    return report;
}

double path_modulus_diagnostic(const SamplePath& path) {
    validate_path(path);
    double max_abs = 0.0;
    for (long i = 0; i < path.n; ++i) {
        max_abs = std::max(max_abs, std::abs(path.values[i + 1] - path.values[i]));
    }
    // log(1/delta) floored at 1 keeps the scale defined for coarse spacings.
    const double log_term = std::max(std::log(1.0 / path.delta), 1.0);
    return max_abs / std::sqrt(path.delta * log_term);
}

}
