#include "jdvol/model.hpp"

#include <cmath>
#include <stdexcept>

namespace jdvol {
namespace {

constexpr double pi = 3.14159265358979323846;

// E[Z^k] for Z ~ N(0, sd^2): zero for odd k, sd^k (k-1)!! for even k.
double gaussian_raw_moment(double sd, int k) {
    if (k < 0) throw std::invalid_argument("jump moment order must be >= 0");
    if (k % 2 == 1) return 0.0;
    double value = 1.0;
    for (int m = k - 1; m >= 1; m -= 2) value *= m;
    return value * std::pow(sd, k);
}

std::map<std::string, double> merge_params(std::map<std::string, double> defaults,
                                           const std::map<std::string, double>& overrides,
                                           const std::string& model_name) {
    for (const auto& [key, value] : overrides) {
        auto it = defaults.find(key);
        if (it == defaults.end()) {
            std::string msg = "model \"" + model_name + "\" has no parameter \"" + key + "\"; valid:";
            for (const auto& [name, unused] : defaults) msg += " " + name;
            throw std::invalid_argument(msg);
        }
        it->second = value;
    }
    return defaults;
}

void attach_gaussian_jumps(ModelSpec& model, double jump_sd) {
    model.jump_size = [jump_sd](Rng& rng, double) {
        std::normal_distribution<double> normal(0.0, jump_sd);
        return normal(rng);
    };
    model.jump_size_moment = [jump_sd](double, int k) { return gaussian_raw_moment(jump_sd, k); };
}

void attach_gaussian_density(ModelSpec& model, double mean, double variance) {
    model.stationary_density = [mean, variance](double x) {
        const double d = x - mean;
        return std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * pi * variance);
    };
    model.stationary_score = [mean, variance](double x) { return -(x - mean) / variance; };
}

ModelSpec make_ou_jump(const std::map<std::string, double>& overrides, bool with_jumps) {
    std::map<std::string, double> defaults = {
        {"kappa", 1.0}, {"mean", 0.0}, {"sigma", 0.5}};
    if (with_jumps) {
        defaults.emplace("lambda", 1.0);
        defaults.emplace("jump_sd", 0.2);
    }
    const std::string name = with_jumps ? "ou-jump" : "ou-pure";
    auto p = merge_params(std::move(defaults), overrides, name);
    const double kappa = p.at("kappa"), mean = p.at("mean"), sigma = p.at("sigma");
    const double lambda = with_jumps ? p.at("lambda") : 0.0;
    const double jump_sd = with_jumps ? p.at("jump_sd") : 0.0;
    if (kappa <= 0.0) throw std::invalid_argument(name + ": kappa must be positive");
    if (sigma < 0.0 || lambda < 0.0 || jump_sd < 0.0)
        throw std::invalid_argument(name + ": sigma, lambda, jump_sd must be nonnegative");

    ModelSpec model;
    model.name = name;
    model.params = p;
    model.drift = [kappa, mean](double x) { return kappa * (mean - x); };
    model.diffusion = [sigma](double) { return sigma; };
    model.jump_intensity = [lambda](double) { return lambda; };
    attach_gaussian_jumps(model, jump_sd);
    model.m2_deriv1 = [](double) { return 0.0; };
    model.m2_deriv2 = [](double) { return 0.0; };
    // Moment-matched Gaussian; exact for lambda = 0, and a kurtosis-level
    // approximation otherwise (never used as a numeric ground truth).
    const double variance = (sigma * sigma + lambda * jump_sd * jump_sd) / (2.0 * kappa);
    if (variance > 0.0) attach_gaussian_density(model, mean, variance);
    return model;
}

ModelSpec make_statejump(const std::map<std::string, double>& overrides) {
    auto p = merge_params({{"kappa", 1.0},
                           {"mean", 0.0},
                           {"sigma", 0.5},
                           {"lambda0", 2.0},
                           {"jump_sd", 0.2}},
                          overrides, "statejump");
    const double kappa = p.at("kappa"), mean = p.at("mean"), sigma = p.at("sigma");
    const double lambda0 = p.at("lambda0"), jump_sd = p.at("jump_sd");
    if (kappa <= 0.0) throw std::invalid_argument("statejump: kappa must be positive");
    if (sigma < 0.0 || lambda0 < 0.0 || jump_sd < 0.0)
        throw std::invalid_argument("statejump: sigma, lambda0, jump_sd must be nonnegative");

    ModelSpec model;
    model.name = "statejump";
    model.params = p;
    model.drift = [kappa, mean](double x) { return kappa * (mean - x); };
    model.diffusion = [sigma](double) { return sigma; };
    model.jump_intensity = [lambda0](double x) { return lambda0 / (1.0 + x * x); };
    attach_gaussian_jumps(model, jump_sd);
    const double a = lambda0 * jump_sd * jump_sd;  // m2(x) = sigma^2 + a/(1+x^2)
    model.m2_deriv1 = [a](double x) {
        const double w = 1.0 + x * x;
        return -2.0 * a * x / (w * w);
    };
    model.m2_deriv2 = [a](double x) {
        const double w = 1.0 + x * x;
        return a * (6.0 * x * x - 2.0) / (w * w * w);
    };
    return model;
}

ModelSpec make_bm_jump(const std::map<std::string, double>& overrides) {
    auto p = merge_params({{"sigma", 0.5}, {"lambda", 1.0}, {"jump_sd", 0.2}},
                          overrides, "bm-jump");
    const double sigma = p.at("sigma"), lambda = p.at("lambda"), jump_sd = p.at("jump_sd");
    if (sigma < 0.0 || lambda < 0.0 || jump_sd < 0.0)
        throw std::invalid_argument("bm-jump: sigma, lambda, jump_sd must be nonnegative");

    ModelSpec model;
    model.name = "bm-jump";
    model.params = p;
    model.drift = [](double) { return 0.0; };
    model.diffusion = [sigma](double) { return sigma; };
    model.jump_intensity = [lambda](double) { return lambda; };
    attach_gaussian_jumps(model, jump_sd);
    model.m2_deriv1 = [](double) { return 0.0; };
    model.m2_deriv2 = [](double) { return 0.0; };
    return model;
}

}  // namespace

double ModelSpec::m2(double x) const {
    const double sigma = diffusion(x);
    const double lambda = jump_intensity(x);
    double jump_part = 0.0;
    if (lambda != 0.0) {
        if (!jump_size_moment)
            throw std::invalid_argument("ModelSpec::m2 needs jump_size_moment when intensity is nonzero");
        jump_part = lambda * jump_size_moment(x, 2);
    }
    return sigma * sigma + jump_part;
}

double ModelSpec::m4(double x) const {
    const double lambda = jump_intensity(x);
    if (lambda == 0.0) return 0.0;
    if (!jump_size_moment)
        throw std::invalid_argument("ModelSpec::m4 needs jump_size_moment when intensity is nonzero");
    return lambda * jump_size_moment(x, 4);
}

const std::map<std::string, ModelFactory>& builtin_models() {
    static const std::map<std::string, ModelFactory> registry = {
        {"ou-jump", [](const std::map<std::string, double>& o) { return make_ou_jump(o, true); }},
        {"ou-pure", [](const std::map<std::string, double>& o) { return make_ou_jump(o, false); }},
        {"statejump", [](const std::map<std::string, double>& o) { return make_statejump(o); }},
        {"bm-jump", [](const std::map<std::string, double>& o) { return make_bm_jump(o); }},
    };
    return registry;
}

ModelSpec builtin_model(const std::string& name, const std::map<std::string, double>& overrides) {
    const auto& registry = builtin_models();
    auto it = registry.find(name);
    if (it == registry.end()) {
        std::string msg = "unknown model \"" + name + "\"; available:";
        for (const auto& [key, unused] : registry) msg += " " + key;
        throw std::invalid_argument(msg);
    }
    return it->second(overrides);
}

}  // namespace jdvol
