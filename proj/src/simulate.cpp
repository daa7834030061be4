#include <cmath>
#include <stdexcept>
#include <string>

#include "jdvol/errors.hpp"
#include "jdvol/model.hpp"

namespace jdvol {
namespace {

void validate(const ModelSpec& model, const SimConfig& cfg) {
    if (!model.drift || !model.diffusion || !model.jump_intensity)
        throw std::invalid_argument("simulate_path: model must define drift, diffusion, jump_intensity");
    if (cfg.n < 1) throw std::invalid_argument("simulate_path: n must be >= 1");
    if (!(cfg.delta > 0.0)) throw std::invalid_argument("simulate_path: delta must be positive");
    if (cfg.substeps < 1) throw std::invalid_argument("simulate_path: substeps must be >= 1");
    if (!model.state_space.contains(cfg.x0))
        throw std::invalid_argument("simulate_path: x0 lies outside the state space");
}

// Monte Carlo stand-in for E[c(x,Y)] when no closed form is supplied; runs on
// its own stream so the path's draws are unaffected.
double mc_jump_mean(const ModelSpec& model, double x, unsigned long long seed, long step) {
    Rng rng(seed ^ (0x9e3779b97f4a7c15ULL + static_cast<unsigned long long>(step)));
    constexpr int draws = 10000;
    double sum = 0.0;
    for (int i = 0; i < draws; ++i) sum += model.jump_size(rng, x);
    return sum / draws;
}

}  // namespace

SamplePath simulate_path(const ModelSpec& model, const SimConfig& cfg, SimDiagnostics* diagnostics) {
    validate(model, cfg);
    SimDiagnostics local;
    SimDiagnostics& diag = diagnostics ? *diagnostics : local;
    diag = SimDiagnostics{};

    Rng rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double dt = cfg.delta / cfg.substeps;
    const double sqrt_dt = std::sqrt(dt);

    SamplePath path;
    path.delta = cfg.delta;
    path.n = cfg.n;
    path.values.resize(cfg.n + 1);
    path.values[0] = cfg.x0;

    double state = cfg.x0;
    for (long i = 1; i <= cfg.n; ++i) {
        double step_jump_mean = 0.0;
        bool jump_mean_cached = false;
        for (int k = 0; k < cfg.substeps; ++k) {
            const double sigma = model.diffusion(state);
            const double lambda = model.jump_intensity(state);
            if (sigma < 0.0)
                throw SimulationError("simulate_path: diffusion went negative at step " + std::to_string(i), i);
            if (lambda < 0.0)
                throw SimulationError("simulate_path: jump intensity went negative at step " + std::to_string(i), i);

            double compensator = 0.0;
            if (lambda > 0.0 && model.jump_size) {
                double mean_jump;
                if (model.jump_size_moment) {
                    mean_jump = model.jump_size_moment(state, 1);
                } else {
                    // One evaluation per observation step, at its left state.
                    if (!jump_mean_cached) {
                        step_jump_mean = mc_jump_mean(model, state, cfg.seed, i);
                        jump_mean_cached = true;
                        diag.compensator_approximate = true;
                    }
                    mean_jump = step_jump_mean;
                }
                compensator = lambda * mean_jump;
            }

            double increment = (model.drift(state) - compensator) * dt + sigma * sqrt_dt * normal(rng);
            if (lambda > 0.0 && model.jump_size) {
                const long jumps = sample_poisson(rng, lambda * dt);
                for (long j = 0; j < jumps; ++j) increment += model.jump_size(rng, state);
            }
            state += increment;
            if (!std::isfinite(state))
                throw SimulationError("simulate_path: state became non-finite at step " + std::to_string(i), i);
            if (!model.state_space.contains(state)) ++diag.boundary_exits;
        }
        path.values[i] = state;
    }
    return path;
}

}  // namespace jdvol
