#include "jdvol/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "jdvol/errors.hpp"
#include "jdvol/stats.hpp"

namespace jdvol {

double bias_constant(const BiasInputs& inputs, Regime regime, const KernelSpec& kernel,
                     std::optional<double> phi) {
    const double bracket = 0.5 * inputs.m2_d2 + inputs.m2_d1 * inputs.score;
    switch (regime) {
        case Regime::small_h:
            if (phi.has_value()) {
                throw std::invalid_argument(
                    "bias_constant: phi only applies to the ratio_h regime");
            }
            return bracket / 3.0;
        case Regime::ratio_h: {
            if (!phi.has_value()) {
                throw std::invalid_argument("bias_constant: ratio_h regime requires phi");
            }
            const double p = *phi;
            if (!(p > 0.0)) {
                throw std::invalid_argument("bias_constant: phi must be positive");
            }
            const double k2 = kernel.moment(1, 2);
            return (k2 * p * p + 1.0 / 3.0) * bracket;
        }
        case Regime::stationary:
            throw std::invalid_argument(
                "bias_constant: pick small_h or ratio_h for the bias; the stationary "
                "regime only changes the variance normalizer");
    }
    throw std::invalid_argument("bias_constant: unknown regime");
}

double std_error(double m4_hat, double eps, double local_time, Regime regime,
                 double theta) {
    if (!(m4_hat >= 0.0)) {
        throw std::invalid_argument("std_error: m4_hat must be nonnegative");
    }
    if (!(eps > 0.0)) {
        throw std::invalid_argument("std_error: eps must be positive");
    }
    if (!(local_time > 0.0)) {
        throw NumericalError("std_error: local time normalizer is not positive");
    }
    const double t = regime == Regime::small_h ? 1.0 : theta;
    if (!(t > 0.0)) {
        throw std::invalid_argument("std_error: theta must be positive");
    }
    return std::sqrt(0.5 * t * m4_hat) / std::sqrt(eps * local_time);
}

InferenceResult confidence_interval(double m2_hat, double m4_hat, double bias_const,
                                    double eps, double local_time, double alpha,
                                    Regime regime, double theta) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("confidence_interval: alpha must lie in (0, 1)");
    }
    InferenceResult out;
    out.m2_hat = m2_hat;
    out.alpha = alpha;
    out.regime = regime;
    out.bias_term = eps * eps * bias_const;
    out.m2_corrected = m2_hat - out.bias_term;
    out.std_error = std_error(m4_hat, eps, local_time, regime, theta);
    const double z = normal_quantile(1.0 - 0.5 * alpha);
    out.ci_low = out.m2_corrected - z * out.std_error;
    out.ci_high = out.m2_corrected + z * out.std_error;
    return out;
}

BandwidthChoice optimal_bandwidth(double m4_hat, double bias_bracket, double local_time,
                                  const KernelSpec& kernel, double phi) {
    if (!(phi > 0.0)) {
        throw std::invalid_argument("optimal_bandwidth: phi must be positive");
    }
    if (!(m4_hat > 0.0)) {
        throw NumericalError("optimal_bandwidth: m4_hat must be positive");
    }
    if (!(local_time > 0.0)) {
        throw NumericalError("optimal_bandwidth: local time must be positive");
    }
    if (bias_bracket == 0.0) {
        throw NumericalError(
            "optimal_bandwidth: bias bracket is zero (flat m2); fall back to a "
            "rule-of-thumb bandwidth");
    }
    const double theta = theta_phi(kernel, phi);
    const double k2 = kernel.moment(1, 2);
    const double gamma_coeff = k2 * phi * phi + 1.0 / 3.0;
    const double num = 0.5 * theta * m4_hat;
    const double den = local_time * gamma_coeff * gamma_coeff * bias_bracket * bias_bracket;
    BandwidthChoice out;
    out.h = phi * std::pow(num / den, 0.2);
    out.eps = out.h / phi;
    return out;
}

double rule_of_thumb_bandwidth(const SamplePath& path) {
    validate_path(path);
    const std::size_t count = path.values.size();
    double mean = 0.0;
    for (double v : path.values) mean += v;
    mean /= static_cast<double>(count);
    double ss = 0.0;
    for (double v : path.values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(count));
    if (!(sd > 0.0)) {
        throw NumericalError("rule_of_thumb_bandwidth: path has zero dispersion");
    }
    return 1.06 * sd * std::pow(static_cast<double>(path.n), -0.2);
}

BiasInputs empirical_bias_inputs(const std::vector<MomentEstimate>& estimates,
                                 const SamplePath& path, double x,
                                 const KernelSpec& kernel, double density_bandwidth) {
    // Derivatives come from a three-point central stencil, but the stencil
    // center must sit in a run of five reliable grid values so one noisy
    // boundary point cannot anchor the curvature estimate.
    std::size_t best = estimates.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 2; j + 2 < estimates.size(); ++j) {
        bool usable = true;
        for (std::size_t k = j - 2; k <= j + 2; ++k) {
            if (!estimates[k].reliable || !std::isfinite(estimates[k].m2)) {
                usable = false;
                break;
            }
        }
        if (!usable) continue;
        const double dist = std::abs(estimates[j].x - x);
        if (dist < best_dist) {
            best_dist = dist;
            best = j;
        }
    }
    if (best == estimates.size()) {
        throw NumericalError(
            "empirical_bias_inputs: need five consecutive reliable grid points near x");
    }
    const double g_right = estimates[best + 1].x - estimates[best].x;
    const double g_left = estimates[best].x - estimates[best - 1].x;
    if (!(g_right > 0.0) ||
        std::abs(g_right - g_left) > 1e-8 * std::max(std::abs(g_right), 1.0)) {
        throw NumericalError("empirical_bias_inputs: grid is not uniform around x");
    }
    BiasInputs out;
    out.source = BiasSource::empirical;
    const double f_lo = estimates[best - 1].m2;
    const double f_mid = estimates[best].m2;
    const double f_hi = estimates[best + 1].m2;
    out.m2_d1 = (f_hi - f_lo) / (2.0 * g_right);
    out.m2_d2 = (f_hi - 2.0 * f_mid + f_lo) / (g_right * g_right);

    double h_d = density_bandwidth;
    if (!(h_d > 0.0)) h_d = rule_of_thumb_bandwidth(path);
    const double horizon = static_cast<double>(path.n) * path.delta;
    const double step = 0.5 * h_d;
    const double p_hi = local_time_hat(path, kernel, h_d, x + step) / horizon;
    const double p_lo = local_time_hat(path, kernel, h_d, x - step) / horizon;
    if (!(p_hi > 0.0) || !(p_lo > 0.0)) {
        throw NumericalError(
            "empirical_bias_inputs: occupation density vanishes near x");
    }
    out.score = (std::log(p_hi) - std::log(p_lo)) / (2.0 * step);
    return out;
}

}
