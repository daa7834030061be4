#pragma once

#include <optional>
#include <vector>

#include "jdvol/estimators.hpp"
#include "jdvol/kernels.hpp"

namespace jdvol {

enum class Regime { small_h, ratio_h, stationary };

enum class BiasSource { analytic, empirical };

// Ingredients of the smoothing-bias constant: first and second derivative of
// the target m2 at x and the log-derivative of the speed/occupation density.
struct BiasInputs {
    double m2_d1 = 0.0;
    double m2_d2 = 0.0;
    double score = 0.0;
    BiasSource source = BiasSource::analytic;
};

struct InferenceResult {
    double x = 0.0;
    double m2_hat = 0.0;
    double m2_corrected = 0.0;  // m2_hat - eps^2 * bias constant
    double std_error = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double bias_term = 0.0;     // eps^2 * bias constant
    double alpha = 0.05;
    Regime regime = Regime::small_h;
};

struct BandwidthChoice {
    double h = 0.0;
    double eps = 0.0;
};

// Bias constant multiplying eps^2. The common bracket is
// 0.5 * m2'' + m2' * score; the vanishing-ratio regime scales it by 1/3 and
// the fixed-ratio regime by (K2 * phi^2 + 1/3). phi must be given exactly for
// ratio_h; the stationary regime reuses one of these two.
double bias_constant(const BiasInputs& inputs, Regime regime, const KernelSpec& kernel,
                     std::optional<double> phi = std::nullopt);

// sqrt(theta * m4 / 2) / sqrt(eps * local_time). theta is forced to 1 in the
// small_h regime. In the stationary regime local_time stands for the
// normalizer n * delta * p_hat(x), which the caller supplies.
double std_error(double m4_hat, double eps, double local_time, Regime regime,
                 double theta = 1.0);

// Bias-corrected interval: m2_hat - eps^2*Gamma +/- z_{1-alpha/2} * std_error.
InferenceResult confidence_interval(double m2_hat, double m4_hat, double bias_const,
                                    double eps, double local_time, double alpha,
                                    Regime regime, double theta = 1.0);

// Plug-in MSE-optimal bandwidth for the fixed-ratio regime:
// h = phi * [ (theta_phi * m4 / 2) / (local_time * (K2 phi^2 + 1/3)^2 * bracket^2) ]^(1/5),
// eps = h / phi. Throws NumericalError when bracket == 0 (flat m2; callers
// should fall back to a rule-of-thumb bandwidth).
BandwidthChoice optimal_bandwidth(double m4_hat, double bias_bracket, double local_time,
                                  const KernelSpec& kernel, double phi);

// Heuristic density-style bandwidth 1.06 * sd * n^(-1/5); not derived from the
// estimator's asymptotics, used only as a fallback when the plug-in rule has
// nothing to work with.
double rule_of_thumb_bandwidth(const SamplePath& path);

// Data-driven bias inputs: second-order central differences of the reliable
// m2 grid values around x (exact on quadratics) and a kernel-density
// log-derivative for the score. density_bandwidth <= 0 picks the
// rule-of-thumb. Throws NumericalError when no five consecutive reliable
// grid points bracket x.
BiasInputs empirical_bias_inputs(const std::vector<MomentEstimate>& estimates,
                                 const SamplePath& path, double x,
                                 const KernelSpec& kernel,
                                 double density_bandwidth = 0.0);

}
