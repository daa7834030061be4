#pragma once

#include <vector>

namespace jdvol {

double normal_cdf(double x);

// Inverse standard normal CDF; rational approximation polished by one Halley
// step, accurate to well below 1e-8. Requires 0 < p < 1.
double normal_quantile(double p);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

// One-sample Kolmogorov-Smirnov test against N(0,1), asymptotic p-value with
// the usual finite-sample adjustment of the test statistic's scaling.
KsResult ks_test_standard_normal(std::vector<double> sample);

}
