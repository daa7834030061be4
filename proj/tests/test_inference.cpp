#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "jdvol/errors.hpp"
#include "jdvol/estimators.hpp"
#include "jdvol/inference.hpp"
#include "jdvol/model.hpp"
#include "jdvol/stats.hpp"

using jdvol::BandwidthChoice;
using jdvol::bias_constant;
using jdvol::BiasInputs;
using jdvol::BiasSource;
using jdvol::builtin_model;
using jdvol::confidence_interval;
using jdvol::empirical_bias_inputs;
using jdvol::InferenceResult;
using jdvol::KernelSpec;
using jdvol::kernel_by_name;
using jdvol::MomentEstimate;
using jdvol::normal_quantile;
using jdvol::NumericalError;
using jdvol::optimal_bandwidth;
using jdvol::Regime;
using jdvol::rule_of_thumb_bandwidth;
using jdvol::SamplePath;
using jdvol::SimConfig;
using jdvol::simulate_path;
using jdvol::std_error;
using jdvol::theta_phi;

namespace {

BiasInputs make_inputs(double d1, double d2, double score) {
    BiasInputs in;
    in.m2_d1 = d1;
    in.m2_d2 = d2;
    in.score = score;
    return in;
}

}  // namespace

TEST_CASE("bias constant scalings in both bandwidth regimes") {
    const KernelSpec& epan = kernel_by_name("epanechnikov");
    // bracket = 0.5 * 2 + 1 * 0 = 1
    const BiasInputs unit = make_inputs(1.0, 2.0, 0.0);
    CHECK(bias_constant(unit, Regime::small_h, epan) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    // K2 = 1/5 for this kernel, so phi = 1 gives 1/5 + 1/3 = 8/15.
    CHECK(bias_constant(unit, Regime::ratio_h, epan, 1.0) ==
          doctest::Approx(8.0 / 15.0).epsilon(1e-14));

    // linear in the bracket
    CHECK(bias_constant(make_inputs(2.0, 4.0, 0.0), Regime::small_h, epan) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    // score contribution enters through m2' * score
    CHECK(bias_constant(make_inputs(1.0, 0.0, 0.7), Regime::small_h, epan) ==
          doctest::Approx(0.7 / 3.0).epsilon(1e-14));

    // the fixed-ratio constant collapses to the vanishing-ratio one as phi -> 0
    CHECK(std::abs(bias_constant(unit, Regime::ratio_h, epan, 1e-5) -
                   bias_constant(unit, Regime::small_h, epan)) < 1e-8);
}

TEST_CASE("bias constant rejects inconsistent regime arguments") {
    const KernelSpec& epan = kernel_by_name("epanechnikov");
    const BiasInputs unit = make_inputs(1.0, 2.0, 0.0);
    CHECK_THROWS_AS(bias_constant(unit, Regime::small_h, epan, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(bias_constant(unit, Regime::ratio_h, epan), std::invalid_argument);
    CHECK_THROWS_AS(bias_constant(unit, Regime::ratio_h, epan, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(bias_constant(unit, Regime::stationary, epan), std::invalid_argument);
}

TEST_CASE("standard error formula and monotonicity") {
    // sqrt(0.5 * 0.0048 / (0.2 * 100))
    const double base = std_error(0.0048, 0.2, 100.0, Regime::small_h);
    CHECK(base == doctest::Approx(std::sqrt(0.5 * 0.0048 / 20.0)).epsilon(1e-14));
    CHECK(base == doctest::Approx(0.010954451150103323).epsilon(1e-12));

    // theta is pinned to 1 when the outer bandwidth vanishes faster
    CHECK(std_error(0.0048, 0.2, 100.0, Regime::small_h, 7.0) == base);
    // fixed-ratio variance scales by theta
    CHECK(std_error(0.0048, 0.2, 100.0, Regime::ratio_h, 0.74) ==
          doctest::Approx(base * std::sqrt(0.74)).epsilon(1e-14));
    // stationary normalization reuses the same arithmetic
    CHECK(std_error(0.0048, 0.2, 100.0, Regime::stationary, 1.0) == base);

    CHECK(std_error(4.0 * 0.0048, 0.2, 100.0, Regime::small_h) ==
          doctest::Approx(2.0 * base).epsilon(1e-14));
    CHECK(std_error(0.0048, 0.2, 400.0, Regime::small_h) ==
          doctest::Approx(0.5 * base).epsilon(1e-14));
    CHECK(std_error(0.0048, 0.8, 100.0, Regime::small_h) ==
          doctest::Approx(0.5 * base).epsilon(1e-14));

    CHECK_THROWS_AS(std_error(-1.0, 0.2, 100.0, Regime::small_h), std::invalid_argument);
    CHECK_THROWS_AS(std_error(0.0048, 0.0, 100.0, Regime::small_h), std::invalid_argument);
    CHECK_THROWS_AS(std_error(0.0048, 0.2, 0.0, Regime::small_h), NumericalError);
}

TEST_CASE("normal quantile and cdf behave like the standard normal") {
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
    CHECK(std::abs(normal_quantile(0.5)) < 1e-12);
    // 2 * (1 - Phi(1)) = 0.31731050786291415
    CHECK(normal_quantile(1.0 - 0.31731050786291415 / 2.0) ==
          doctest::Approx(1.0).epsilon(1e-7));
    for (double p : {0.01, 0.1, 0.317, 0.5, 0.84, 0.975, 0.999}) {
        CAPTURE(p);
        CHECK(normal_quantile(p) == doctest::Approx(-normal_quantile(1.0 - p)).epsilon(1e-9));
        CHECK(jdvol::normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
    }
    CHECK_THROWS_AS(normal_quantile(0.0), std::invalid_argument);
    CHECK_THROWS_AS(normal_quantile(1.0), std::invalid_argument);
}

TEST_CASE("kolmogorov-smirnov sanity") {
    // a perfectly normal-shaped sample: quantiles at midpoints
    std::vector<double> perfect;
    const int n = 1000;
    for (int i = 0; i < n; ++i)
        perfect.push_back(normal_quantile((i + 0.5) / n));
    const jdvol::KsResult fit = jdvol::ks_test_standard_normal(perfect);
    CHECK(fit.statistic < 0.01);
    CHECK(fit.p_value > 0.99);

    std::vector<double> shifted = perfect;
    for (double& v : shifted) v += 0.5;
    CHECK(jdvol::ks_test_standard_normal(shifted).p_value < 1e-6);

    const jdvol::KsResult single = jdvol::ks_test_standard_normal({0.0});
    CHECK(single.statistic == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("confidence interval assembles its pieces") {
    const double m2 = 0.3, m4 = 0.0048, gamma = 0.5, eps = 0.2, lt = 100.0;
    const InferenceResult r =
        confidence_interval(m2, m4, gamma, eps, lt, 0.05, Regime::small_h);
    const double se = std_error(m4, eps, lt, Regime::small_h);
    const double z = normal_quantile(0.975);
    CHECK(r.bias_term == doctest::Approx(eps * eps * gamma).epsilon(1e-14));
    CHECK(r.m2_corrected == doctest::Approx(m2 - 0.02).epsilon(1e-14));
    CHECK(r.std_error == doctest::Approx(se).epsilon(1e-14));
    CHECK(r.ci_low == doctest::Approx(m2 - 0.02 - z * se).epsilon(1e-13));
    CHECK(r.ci_high == doctest::Approx(m2 - 0.02 + z * se).epsilon(1e-13));
    CHECK(r.ci_high - r.ci_low == doctest::Approx(2.0 * z * se).epsilon(1e-12));
    CHECK(r.ci_high - r.ci_low ==
          doctest::Approx(2.0 * 1.959963984540054 * 0.010954451150103323).epsilon(1e-9));
    CHECK(r.m2_hat == m2);
    CHECK(r.alpha == 0.05);
    CHECK(r.regime == Regime::small_h);

    // wider at smaller alpha
    const InferenceResult tight =
        confidence_interval(m2, m4, gamma, eps, lt, 0.01, Regime::small_h);
    CHECK(tight.ci_high - tight.ci_low > r.ci_high - r.ci_low);

    CHECK_THROWS_AS(confidence_interval(m2, m4, gamma, eps, lt, 0.0, Regime::small_h),
                    std::invalid_argument);
    CHECK_THROWS_AS(confidence_interval(m2, m4, gamma, eps, lt, 1.0, Regime::small_h),
                    std::invalid_argument);
}

TEST_CASE("plug-in bandwidth arithmetic and scalings") {
    const KernelSpec& epan = kernel_by_name("epanechnikov");
    const double m4 = 0.0048, bracket = 1.0, lt = 100.0, phi = 1.0;
    const BandwidthChoice bw = optimal_bandwidth(m4, bracket, lt, epan, phi);
    const double theta = theta_phi(epan, phi);
    const double k2 = epan.moment(1, 2);
    const double expected =
        phi * std::pow(0.5 * theta * m4 /
                           (lt * std::pow(k2 * phi * phi + 1.0 / 3.0, 2.0) * bracket * bracket),
                       0.2);
    CHECK(bw.h == doctest::Approx(expected).epsilon(1e-13));
    CHECK(bw.eps == doctest::Approx(bw.h / phi).epsilon(1e-14));

    // quadrupled local time shrinks h by 4^(-1/5)
    const BandwidthChoice big_lt = optimal_bandwidth(m4, bracket, 4.0 * lt, epan, phi);
    CHECK(big_lt.h == doctest::Approx(bw.h * std::pow(4.0, -0.2)).epsilon(1e-12));
    // doubled curvature shrinks h by 2^(-2/5)
    const BandwidthChoice big_bias = optimal_bandwidth(m4, 2.0 * bracket, lt, epan, phi);
    CHECK(big_bias.h == doctest::Approx(bw.h * std::pow(2.0, -0.4)).epsilon(1e-12));

    CHECK_THROWS_AS(optimal_bandwidth(m4, 0.0, lt, epan, phi), NumericalError);
    CHECK_THROWS_AS(optimal_bandwidth(0.0, bracket, lt, epan, phi), NumericalError);
    CHECK_THROWS_AS(optimal_bandwidth(m4, bracket, 0.0, epan, phi), NumericalError);
    CHECK_THROWS_AS(optimal_bandwidth(m4, bracket, lt, epan, 0.0), std::invalid_argument);
}

TEST_CASE("rule-of-thumb bandwidth follows the sample scale") {
    SamplePath path;
    path.delta = 0.01;
    path.n = 999;
    path.values.resize(1000);
    for (std::size_t k = 0; k < path.values.size(); ++k)
        path.values[k] = std::sin(0.01 * static_cast<double>(k));
    double mean = 0.0;
    for (double v : path.values) mean += v;
    mean /= static_cast<double>(path.values.size());
    double ss = 0.0;
    for (double v : path.values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(path.values.size()));
    CHECK(rule_of_thumb_bandwidth(path) ==
          doctest::Approx(1.06 * sd * std::pow(999.0, -0.2)).epsilon(1e-12));

    SamplePath flat;
    flat.delta = 0.01;
    flat.n = 10;
    flat.values.assign(11, 3.0);
    CHECK_THROWS_AS(rule_of_thumb_bandwidth(flat), NumericalError);
}

TEST_CASE("empirical stencils recover quadratic derivatives exactly") {
    const KernelSpec& epan = kernel_by_name("epanechnikov");
    const SamplePath path = simulate_path(builtin_model("ou-pure"), [] {
        SimConfig cfg;
        cfg.n = 2000;
        cfg.delta = 0.01;
        cfg.seed = 13;
        return cfg;
    }());

    std::vector<MomentEstimate> grid_data;
    for (int k = -4; k <= 4; ++k) {
        MomentEstimate e;
        e.x = 0.25 * k;
        e.m2 = 1.0 + 2.0 * e.x + 3.0 * e.x * e.x;
        e.m4 = 0.01;
        e.local_time = 50.0;
        e.reliable = true;
        grid_data.push_back(e);
    }
    const BiasInputs at0 = empirical_bias_inputs(grid_data, path, 0.0, epan);
    CHECK(at0.m2_d1 == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(at0.m2_d2 == doctest::Approx(6.0).epsilon(1e-9));
    CHECK(at0.source == BiasSource::empirical);

    const BiasInputs off = empirical_bias_inputs(grid_data, path, 0.52, epan);
    CHECK(off.m2_d1 == doctest::Approx(2.0 + 6.0 * 0.5).epsilon(1e-9));
    CHECK(off.m2_d2 == doctest::Approx(6.0).epsilon(1e-9));
}

TEST_CASE("empirical stencils demand five consecutive reliable points") {
    const KernelSpec& epan = kernel_by_name("epanechnikov");
    const SamplePath path = simulate_path(builtin_model("ou-pure"), [] {
        SimConfig cfg;
        cfg.n = 500;
        cfg.delta = 0.01;
        cfg.seed = 13;
        return cfg;
    }());
    std::vector<MomentEstimate> spotty;
    for (int k = 0; k < 9; ++k) {
        MomentEstimate e;
        e.x = 0.1 * k;
        e.m2 = 1.0;
        e.reliable = (k % 2 == 0);  // no run of five
        spotty.push_back(e);
    }
    try {
        empirical_bias_inputs(spotty, path, 0.4, epan);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("five consecutive") != std::string::npos);
    }

    // non-uniform spacing around the stencil center is rejected
    std::vector<MomentEstimate> uneven;
    const double xs[] = {0.0, 0.1, 0.25, 0.3, 0.4, 0.5, 0.6};
    for (double x : xs) {
        MomentEstimate e;
        e.x = x;
        e.m2 = 1.0;
        e.reliable = true;
        uneven.push_back(e);
    }
    CHECK_THROWS_AS(empirical_bias_inputs(uneven, path, 0.25, epan), NumericalError);
}

TEST_CASE("empirical score matches the stationary gaussian score") {
    // ou-pure stationary law is N(0, sigma^2 / (2 kappa)) with score -x / var.
    const KernelSpec& epan = kernel_by_name("epanechnikov");
    const SamplePath path = simulate_path(builtin_model("ou-pure"), [] {
        SimConfig cfg;
        cfg.n = 200000;
        cfg.delta = 0.01;
        cfg.seed = 29;
        return cfg;
    }());
    std::vector<MomentEstimate> grid_data;
    for (int k = -4; k <= 4; ++k) {
        MomentEstimate e;
        e.x = 0.05 * k + 0.2;
        e.m2 = 0.25;
        e.reliable = true;
        grid_data.push_back(e);
    }
    const BiasInputs at = empirical_bias_inputs(grid_data, path, 0.2, epan);
    const double truth = -0.2 / 0.125;
    CHECK(std::abs(at.score - truth) < 0.35);
}
