#pragma once

#include <cmath>
#include <random>

namespace jdvol {

using Rng = std::mt19937_64;

// Poisson draw with a mean that changes every call (the per-substep jump count).
// Product method for small means; std::poisson_distribution handles the rest.
template <class Engine>
long sample_poisson(Engine& rng, double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 30.0) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double floor = std::exp(-mean);
        long k = 0;
        double prod = unif(rng);
        while (prod > floor) {
            ++k;
            prod *= unif(rng);
        }
        return k;
    }
    std::poisson_distribution<long> pois(mean);
    return pois(rng);
}

}
