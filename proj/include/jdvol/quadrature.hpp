#pragma once

#include <functional>
#include <vector>

namespace jdvol {

// Adaptive Gauss-Kronrod (G7, K15) integration to an absolute tolerance.
// Bisects the worst interval until the summed error estimate is under tol.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-10, int max_depth = 60);

// Same integrator, but the initial work list is the given panel decomposition.
// breakpoints must be sorted; used when the integrand has known kinks.
double integrate_panels(const std::function<double(double)>& f,
                        const std::vector<double>& breakpoints,
                        double abs_tol = 1e-10, int max_depth = 60);

}
