#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "jdvol/errors.hpp"
#include "jdvol/estimators.hpp"
#include "jdvol/inference.hpp"
#include "jdvol/kernels.hpp"
#include "jdvol/model.hpp"
#include "jdvol/version.hpp"

namespace py = pybind11;

namespace {

jdvol::SamplePath make_path(std::vector<double> values, double delta) {
    jdvol::SamplePath path;
    path.values = std::move(values);
    path.delta = delta;
    path.n = static_cast<long>(path.values.size()) - 1;
    jdvol::validate_path(path);
    return path;
}

jdvol::Regime parse_regime(const std::string& name) {
    if (name == "small_h") return jdvol::Regime::small_h;
    if (name == "ratio_h") return jdvol::Regime::ratio_h;
    if (name == "stationary") return jdvol::Regime::stationary;
    throw std::invalid_argument("unknown regime \"" + name +
                                "\"; expected small_h, ratio_h, or stationary");
}

std::string regime_name(jdvol::Regime regime) {
    switch (regime) {
        case jdvol::Regime::small_h: return "small_h";
        case jdvol::Regime::ratio_h: return "ratio_h";
        default: return "stationary";
    }
}

py::dict simulate(const std::string& model, long n, double delta,
                  const std::map<std::string, double>& params, double x0,
                  int substeps, unsigned long long seed) {
    const jdvol::ModelSpec spec = jdvol::builtin_model(model, params);
    jdvol::SimConfig cfg;
    cfg.x0 = x0;
    cfg.n = n;
    cfg.delta = delta;
    cfg.substeps = substeps;
    cfg.seed = seed;
    jdvol::SimDiagnostics diag;
    const jdvol::SamplePath path = jdvol::simulate_path(spec, cfg, &diag);
    py::dict out;
    out["values"] = path.values;
    out["delta"] = path.delta;
    out["n"] = path.n;
    out["boundary_exits"] = diag.boundary_exits;
    out["compensator_approximate"] = diag.compensator_approximate;
    return out;
}

py::list estimate_moments(const std::vector<double>& values, double delta, double h,
                          double eps, const std::vector<double>& grid,
                          const std::string& kernel, const std::string& engine,
                          double min_local_time) {
    const jdvol::SamplePath path = make_path(values, delta);
    jdvol::EstimatorConfig cfg;
    cfg.h = h;
    cfg.eps = eps;
    cfg.kernel = kernel;
    cfg.grid = grid;
    cfg.min_local_time = min_local_time;
    if (engine == "fast") {
        cfg.engine = jdvol::Engine::fast;
    } else if (engine == "naive") {
        cfg.engine = jdvol::Engine::naive;
    } else {
        throw std::invalid_argument("unknown engine \"" + engine +
                                    "\"; expected fast or naive");
    }
    py::list out;
    for (const jdvol::MomentEstimate& est : jdvol::double_smoothed_moments(path, cfg)) {
        py::dict row;
        row["x"] = est.x;
        row["m2"] = est.m2;
        row["m4"] = est.m4;
        row["local_time"] = est.local_time;
        row["reliable"] = est.reliable;
        out.append(row);
    }
    return out;
}

py::dict default_config(const std::vector<double>& values, double delta) {
    const jdvol::SamplePath path = make_path(values, delta);
    const jdvol::EstimatorConfig cfg = jdvol::resolve_config(path, jdvol::EstimatorConfig{});
    py::dict out;
    out["h"] = cfg.h;
    out["eps"] = cfg.eps;
    out["kernel"] = cfg.kernel;
    out["grid"] = cfg.grid;
    out["min_local_time"] = cfg.min_local_time;
    return out;
}

double local_time(const std::vector<double>& values, double delta, double x, double h,
                  const std::string& kernel) {
    const jdvol::SamplePath path = make_path(values, delta);
    return jdvol::local_time_hat(path, jdvol::kernel_by_name(kernel), h, x);
}

double theta_phi(const std::string& kernel, double phi) {
    return jdvol::theta_phi(jdvol::kernel_by_name(kernel), phi);
}

double bias_constant(double m2_d1, double m2_d2, double score, const std::string& regime,
                     const std::string& kernel, std::optional<double> phi) {
    jdvol::BiasInputs inputs;
    inputs.m2_d1 = m2_d1;
    inputs.m2_d2 = m2_d2;
    inputs.score = score;
    return jdvol::bias_constant(inputs, parse_regime(regime), jdvol::kernel_by_name(kernel),
                                phi);
}

py::dict confidence_interval(double m2_hat, double m4_hat, double bias_const, double eps,
                             double local_time_value, double alpha,
                             const std::string& regime, double theta) {
    const jdvol::InferenceResult r = jdvol::confidence_interval(
        m2_hat, m4_hat, bias_const, eps, local_time_value, alpha, parse_regime(regime),
        theta);
    py::dict out;
    out["m2_hat"] = r.m2_hat;
    out["m2_corrected"] = r.m2_corrected;
    out["std_error"] = r.std_error;
    out["ci_low"] = r.ci_low;
    out["ci_high"] = r.ci_high;
    out["bias_term"] = r.bias_term;
    out["alpha"] = r.alpha;
    out["regime"] = regime_name(r.regime);
    return out;
}

py::dict optimal_bandwidth(double m4_hat, double bias_bracket, double local_time_value,
                           const std::string& kernel, double phi) {
    const jdvol::BandwidthChoice choice = jdvol::optimal_bandwidth(
        m4_hat, bias_bracket, local_time_value, jdvol::kernel_by_name(kernel), phi);
    py::dict out;
    out["h"] = choice.h;
    out["eps"] = choice.eps;
    return out;
}

py::list single_smoothed(const std::vector<double>& values, double delta, double h,
                         const std::vector<double>& grid, const std::string& kernel) {
    const jdvol::SamplePath path = make_path(values, delta);
    py::list out;
    for (const jdvol::SingleSmoothedPoint& pt :
         jdvol::single_smoothed_m2(path, jdvol::kernel_by_name(kernel), h, grid)) {
        py::dict row;
        row["x"] = pt.x;
        row["m2"] = pt.m2;
        row["local_time"] = pt.local_time;
        row["reliable"] = pt.reliable;
        out.append(row);
    }
    return out;
}

py::tuple model_moments(const std::string& model, double x,
                        const std::map<std::string, double>& params) {
    const jdvol::ModelSpec spec = jdvol::builtin_model(model, params);
    return py::make_tuple(spec.m2(x), spec.m4(x));
}

std::vector<std::string> list_models() {
    std::vector<std::string> names;
    for (const auto& [name, factory] : jdvol::builtin_models()) names.push_back(name);
    return names;
}

}  // namespace

PYBIND11_MODULE(_jdvol, m) {
    m.doc() = "double-smoothed conditional volatility estimation for jump diffusions";
    m.attr("__version__") = jdvol::version_string;

    py::register_exception<jdvol::NumericalError>(m, "NumericalError", PyExc_RuntimeError);
    py::register_exception<jdvol::SimulationError>(m, "SimulationError", PyExc_RuntimeError);
    py::register_exception<jdvol::ParseError>(m, "ParseError", PyExc_ValueError);

    m.def("simulate", &simulate, py::arg("model"), py::arg("n"), py::arg("delta"),
          py::arg("params") = std::map<std::string, double>{}, py::arg("x0") = 0.0,
          py::arg("substeps") = 10, py::arg("seed") = 1,
          "Simulate a built-in jump-diffusion model; returns values and diagnostics.");
    m.def("estimate_moments", &estimate_moments, py::arg("values"), py::arg("delta"),
          py::arg("h") = 0.0, py::arg("eps") = 0.0,
          py::arg("grid") = std::vector<double>{}, py::arg("kernel") = "epanechnikov",
          py::arg("engine") = "fast", py::arg("min_local_time") = -1.0,
          "Double-smoothed conditional second/fourth moment estimates on a grid. "
          "Nonpositive h, eps, or an empty grid resolve to the default rules.");
    m.def("default_config", &default_config, py::arg("values"), py::arg("delta"),
          "Resolved default bandwidths, grid, and reliability floor for a path.");
    m.def("local_time", &local_time, py::arg("values"), py::arg("delta"), py::arg("x"),
          py::arg("h"), py::arg("kernel") = "epanechnikov",
          "Occupation-density estimate at x.");
    m.def("theta_phi", &theta_phi, py::arg("kernel"), py::arg("phi"),
          "Smoothing-overlap variance constant for bandwidth ratio phi = h / eps.");
    m.def("bias_constant", &bias_constant, py::arg("m2_d1"), py::arg("m2_d2"),
          py::arg("score"), py::arg("regime") = "small_h",
          py::arg("kernel") = "epanechnikov", py::arg("phi") = std::nullopt,
          "Bias constant multiplying eps^2 in the given regime.");
    m.def("confidence_interval", &confidence_interval, py::arg("m2_hat"), py::arg("m4_hat"),
          py::arg("bias_const"), py::arg("eps"), py::arg("local_time"),
          py::arg("alpha") = 0.05, py::arg("regime") = "small_h", py::arg("theta") = 1.0,
          "Bias-corrected normal confidence interval for m2.");
    m.def("optimal_bandwidth", &optimal_bandwidth, py::arg("m4_hat"),
          py::arg("bias_bracket"), py::arg("local_time"),
          py::arg("kernel") = "epanechnikov", py::arg("phi") = 1.0,
          "Plug-in MSE-optimal bandwidths for the fixed-ratio regime.");
    m.def("single_smoothed", &single_smoothed, py::arg("values"), py::arg("delta"),
          py::arg("h"), py::arg("grid"), py::arg("kernel") = "epanechnikov",
          "Single-smoothed benchmark m2 estimates on a grid.");
    m.def("model_moments", &model_moments, py::arg("model"), py::arg("x"),
          py::arg("params") = std::map<std::string, double>{},
          "Analytic (m2, m4) of a built-in model at state x.");
    m.def("list_models", &list_models, "Names of the built-in model catalog.");
    m.def("list_kernels", &jdvol::kernel_catalog, "Names of the kernel catalog.");
}
