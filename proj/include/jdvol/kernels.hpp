#pragma once

#include <functional>
#include <string>
#include <vector>

namespace jdvol {

// Symmetric smoothing kernel with unit mass. evaluate() is exactly zero outside
// [-support_radius, support_radius]; cdf() is its antiderivative with cdf(-R)=0.
struct KernelSpec {
    std::string name;
    double support_radius = 1.0;
    std::function<double(double)> evaluate;
    std::function<double(double)> cdf;

    // moment(i, j) = integral of K(u)^i * u^j du; analytic for the catalog kernels.
    // Odd j vanishes by symmetry. Requires i >= 1, j >= 0.
    double moment(int power, int degree) const;

    std::function<double(int, int)> moment_fn;
};

// Catalog lookup: "epanechnikov", "quartic", "gaussian". The gaussian is
// truncated at |u| <= 6 and renormalized so that every kernel has a finite
// support usable by the sorted-prefix estimator engine; reported moments are
// the untruncated values (the difference is below 1e-7).
const KernelSpec& kernel_by_name(const std::string& name);

std::vector<std::string> kernel_catalog();

// Smoothing-overlap variance constant of the bandwidth-ratio regime:
// theta = (1/2) * integral over z of [F((z+1)/phi) - F((z-1)/phi)]^2 dz,
// F the kernel cdf. Tends to 1 as phi -> 0. Requires phi > 0.
double theta_phi(const KernelSpec& kernel, double phi);

}
