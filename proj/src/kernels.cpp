#include "jdvol/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "jdvol/quadrature.hpp"

namespace jdvol {
namespace {

constexpr double pi = 3.14159265358979323846;

void check_moment_args(int power, int degree) {
    if (power < 1) throw std::invalid_argument("kernel moment: power must be >= 1");
    if (degree < 0) throw std::invalid_argument("kernel moment: degree must be >= 0");
}

// integral over [-1,1] of coef^i * (1-u^2)^(p*i) * u^j, via the beta identity
// integral (1-u^2)^m u^j = Gamma(m+1) Gamma((j+1)/2) / Gamma(m + (j+3)/2).
double polynomial_moment(double coef, int p, int power, int degree) {
    check_moment_args(power, degree);
    if (degree % 2 == 1) return 0.0;
    const double m = static_cast<double>(p) * power;
    const double logval = std::lgamma(m + 1.0) + std::lgamma(0.5 * (degree + 1)) -
                          std::lgamma(m + 0.5 * (degree + 3));
    return std::pow(coef, power) * std::exp(logval);
}

double gaussian_moment(int power, int degree) {
    check_moment_args(power, degree);
    if (degree % 2 == 1) return 0.0;
    const double half = 0.5 * (degree + 1);
    const double logval = -0.5 * power * std::log(2.0 * pi) + std::lgamma(half) +
                          half * std::log(2.0 / power);
    return std::exp(logval);
}

double normal_cdf_raw(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

KernelSpec make_epanechnikov() {
    KernelSpec k;
    k.name = "epanechnikov";
    k.support_radius = 1.0;
    k.evaluate = [](double u) { return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0; };
    k.cdf = [](double u) {
        if (u <= -1.0) return 0.0;
        if (u >= 1.0) return 1.0;
        return 0.25 * (2.0 + 3.0 * u - u * u * u);
    };
    k.moment_fn = [](int i, int j) { return polynomial_moment(0.75, 1, i, j); };
    return k;
}

KernelSpec make_quartic() {
    KernelSpec k;
    k.name = "quartic";
    k.support_radius = 1.0;
    k.evaluate = [](double u) {
        if (std::abs(u) > 1.0) return 0.0;
        const double w = 1.0 - u * u;
        return 0.9375 * w * w;
    };
    k.cdf = [](double u) {
        if (u <= -1.0) return 0.0;
        if (u >= 1.0) return 1.0;
        return 0.5 + 0.9375 * (u - 2.0 * u * u * u / 3.0 + u * u * u * u * u / 5.0);
    };
    k.moment_fn = [](int i, int j) { return polynomial_moment(0.9375, 2, i, j); };
    return k;
}

KernelSpec make_gaussian() {
    // Truncated at 6 sigma and renormalized; mass removed is ~2e-9.
    const double radius = 6.0;
    const double norm = 1.0 / (1.0 - 2.0 * normal_cdf_raw(-radius));
    KernelSpec k;
    k.name = "gaussian";
    k.support_radius = radius;
    k.evaluate = [norm, radius](double u) {
        if (std::abs(u) > radius) return 0.0;
        return norm * std::exp(-0.5 * u * u) / std::sqrt(2.0 * pi);
    };
    k.cdf = [norm, radius](double u) {
        if (u <= -radius) return 0.0;
        if (u >= radius) return 1.0;
        return std::clamp(norm * (normal_cdf_raw(u) - normal_cdf_raw(-radius)), 0.0, 1.0);
    };
    k.moment_fn = [](int i, int j) { return gaussian_moment(i, j); };
    return k;
}

}  // namespace

double KernelSpec::moment(int power, int degree) const {
    if (moment_fn) return moment_fn(power, degree);
    check_moment_args(power, degree);
    if (degree % 2 == 1) return 0.0;
    const double r = support_radius;
    return integrate(
        [this, power, degree](double u) {
            return std::pow(evaluate(u), power) * std::pow(u, degree);
        },
        -r, r, 1e-9);
}

const KernelSpec& kernel_by_name(const std::string& name) {
    static const std::map<std::string, KernelSpec> catalog = [] {
        std::map<std::string, KernelSpec> m;
        m["epanechnikov"] = make_epanechnikov();
        m["quartic"] = make_quartic();
        m["gaussian"] = make_gaussian();
        return m;
    }();
    auto it = catalog.find(name);
    if (it == catalog.end()) {
        std::string msg = "unknown kernel \"" + name + "\"; available:";
        for (const auto& [key, value] : catalog) msg += " " + key;
        throw std::invalid_argument(msg);
    }
    return it->second;
}

std::vector<std::string> kernel_catalog() {
    return {"epanechnikov", "gaussian", "quartic"};
}

double theta_phi(const KernelSpec& kernel, double phi) {
    if (!(phi > 0.0)) throw std::invalid_argument("theta_phi: phi must be positive");
    const double r = kernel.support_radius;
    const auto& cdf = kernel.cdf;
    auto window = [&](double z) {
        const double g = cdf((z + 1.0) / phi) - cdf((z - 1.0) / phi);
        return 0.5 * g * g;
    };
    // The integrand vanishes outside [-1-phi*r, 1+phi*r] and (for compact
    // kernels) has kinks where a window edge crosses the kernel support.
    const double zmax = 1.0 + phi * r;
    std::vector<double> cuts = {-zmax, -1.0 + phi * r, 0.0, 1.0 - phi * r, zmax};
    std::sort(cuts.begin(), cuts.end());
    for (double& c : cuts) c = std::clamp(c, -zmax, zmax);
    return integrate_panels(window, cuts, 1e-8);
}

}  // namespace jdvol
