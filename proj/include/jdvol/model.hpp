#pragma once

#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "jdvol/random.hpp"

namespace jdvol {

struct StateSpace {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool contains(double x) const { return x >= lo && x <= hi; }
};

// Jump diffusion dX = mu(X)dt + sigma(X)dW + dJ with jump arrivals of
// state-dependent intensity lambda(X) and sizes drawn by jump_size; the
// compensator -lambda(X) E[c(X,Y)] dt is applied by the simulator, so drift
// is the total infinitesimal mean of X.
struct ModelSpec {
    std::string name;
    std::function<double(double)> drift;
    std::function<double(double)> diffusion;       // must be >= 0 on the state space
    std::function<double(double)> jump_intensity;  // must be >= 0 on the state space
    std::function<double(Rng&, double)> jump_size; // draws c(x, Y)

    // E[c(x,Y)^k]; empty when no closed form is known. Needed for analytic
    // conditional moments and for the exact compensator.
    std::function<double(double, int)> jump_size_moment;

    StateSpace state_space;

    // Optional analytic companions (built-ins fill what they can).
    std::function<double(double)> stationary_density;
    std::function<double(double)> stationary_score;  // s'(x)/s(x)
    std::function<double(double)> m2_deriv1;         // d/dx of m2
    std::function<double(double)> m2_deriv2;

    std::map<std::string, double> params;  // resolved parameter values

    bool has_jump_moments() const { return static_cast<bool>(jump_size_moment); }

    // Conditional second/fourth moments of the infinitesimal increment law:
    // m2 = sigma^2 + lambda E[c^2], m4 = lambda E[c^4]. Require jump moments
    // (or lambda identically zero, in which case m4 = 0).
    double m2(double x) const;
    double m4(double x) const;
};

struct SimConfig {
    double x0 = 0.0;
    long n = 0;            // number of observed increments; values has n+1 entries
    double delta = 0.0;    // observation spacing
    int substeps = 10;     // Euler substeps per observation step
    unsigned long long seed = 1;
};

struct SamplePath {
    std::vector<double> values;  // X_0, X_delta, ..., X_{n delta}
    double delta = 0.0;
    long n = 0;
};

struct SimDiagnostics {
    long boundary_exits = 0;
    bool compensator_approximate = false;
};

// Euler scheme with coefficients frozen at each substep's left endpoint and
// per-substep Poisson jump counts. Deterministic given config.seed. Throws
// SimulationError (with the offending step) if the state becomes non-finite.
SamplePath simulate_path(const ModelSpec& model, const SimConfig& config,
                         SimDiagnostics* diagnostics = nullptr);

using ModelFactory = std::function<ModelSpec(const std::map<std::string, double>&)>;

// Built-in catalog: "ou-jump", "ou-pure", "statejump", "bm-jump". Each factory
// takes parameter overrides keyed by the names in the model's params map and
// rejects unknown keys.
const std::map<std::string, ModelFactory>& builtin_models();

ModelSpec builtin_model(const std::string& name,
                        const std::map<std::string, double>& overrides = {});

}
