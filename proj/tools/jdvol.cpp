#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "jdvol/errors.hpp"
#include "jdvol/estimators.hpp"
#include "jdvol/inference.hpp"
#include "jdvol/io.hpp"
#include "jdvol/kernels.hpp"
#include "jdvol/mc.hpp"
#include "jdvol/model.hpp"
#include "jdvol/stats.hpp"
#include "jdvol/version.hpp"

namespace {

using jdvol::format_double;
using jdvol::HeaderLines;

std::map<std::string, double> parse_param_list(const std::vector<std::string>& items) {
    std::map<std::string, double> params;
    for (const std::string& item : items) {
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
            throw std::invalid_argument("--param expects name=value, got '" + item + "'");
        }
        const std::string name = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        try {
            std::size_t used = 0;
            const double v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
            params[name] = v;
        } catch (const std::exception&) {
            throw std::invalid_argument("--param " + name + ": cannot parse number '" +
                                        value + "'");
        }
    }
    return params;
}

struct SourceOpts {
    std::string input;
    std::string model = "ou-jump";
    bool model_given = false;
    std::vector<std::string> params;
    long n = 10000;
    double delta = 0.01;
    double x0 = 0.0;
    int substeps = 10;
    unsigned long long seed = 1;
    std::string time_col = "time";
    std::string price_col = "value";
    double resample_delta = 0.0;
    bool has_resample = false;
    bool log_prices = false;
};

void add_source_options(CLI::App* sub, SourceOpts& opts) {
    sub->add_option("--input", opts.input, "CSV file with time and level columns");
    auto* model = sub->add_option("--model", opts.model, "built-in model to simulate from");
    model->each([&opts](const std::string&) { opts.model_given = true; });
    sub->add_option("--param", opts.params, "model parameter override name=value");
    sub->add_option("--n", opts.n, "number of simulated increments");
    sub->add_option("--delta", opts.delta, "observation spacing for simulation");
    sub->add_option("--x0", opts.x0, "initial state for simulation");
    sub->add_option("--substeps", opts.substeps, "Euler substeps per observation");
    sub->add_option("--seed", opts.seed, "simulation seed");
    sub->add_option("--time-col", opts.time_col, "time column name (default time)");
    sub->add_option("--price-col", opts.price_col, "level column name (default value)");
    auto* rs = sub->add_option("--resample-delta", opts.resample_delta,
                               "previous-tick resample interval for irregular data");
    rs->each([&opts](const std::string&) { opts.has_resample = true; });
    sub->add_flag("--log-prices", opts.log_prices,
                  "estimate on log levels (requires positive inputs)");
}

jdvol::SamplePath load_path(const SourceOpts& opts, HeaderLines& header) {
    if (!opts.input.empty() && opts.model_given) {
        throw std::invalid_argument("pass either --input or --model, not both");
    }
    if (opts.input.empty() && !opts.model_given) {
        throw std::invalid_argument("pass --input FILE or --model NAME");
    }
    if (!opts.input.empty()) {
        jdvol::IngestOptions ingest;
        ingest.columns.time_col = opts.time_col;
        ingest.columns.price_col = opts.price_col;
        if (opts.has_resample) ingest.resample_delta = opts.resample_delta;
        ingest.log_prices = opts.log_prices;
        header.emplace_back("input", opts.input);
        if (opts.has_resample)
            header.emplace_back("resample_delta", format_double(opts.resample_delta));
        header.emplace_back("log_prices", opts.log_prices ? "true" : "false");
        return jdvol::ingest_csv(opts.input, ingest);
    }
    const jdvol::ModelSpec model =
        jdvol::builtin_model(opts.model, parse_param_list(opts.params));
    jdvol::SimConfig cfg;
    cfg.x0 = opts.x0;
    cfg.n = opts.n;
    cfg.delta = opts.delta;
    cfg.substeps = opts.substeps;
    cfg.seed = opts.seed;
    jdvol::SimDiagnostics diag;
    const jdvol::SamplePath path = jdvol::simulate_path(model, cfg, &diag);
    header.emplace_back("model", opts.model);
    std::string params;
    for (const auto& [key, value] : model.params) {
        if (!params.empty()) params += ' ';
        params += key + "=" + format_double(value);
    }
    header.emplace_back("params", params);
    header.emplace_back("n", std::to_string(opts.n));
    header.emplace_back("delta", format_double(opts.delta));
    header.emplace_back("x0", format_double(opts.x0));
    header.emplace_back("substeps", std::to_string(opts.substeps));
    header.emplace_back("seed", std::to_string(opts.seed));
    header.emplace_back("boundary_exits", std::to_string(diag.boundary_exits));
    header.emplace_back("compensator",
                        diag.compensator_approximate ? "monte-carlo" : "analytic");
    return path;
}

void emit(const std::string& content, const std::string& out_file) {
    if (out_file.empty()) {
        std::fputs(content.c_str(), stdout);
    } else {
        jdvol::write_text_file(out_file, content);
    }
}

jdvol::Regime parse_regime(const std::string& name) {
    if (name == "small_h") return jdvol::Regime::small_h;
    if (name == "ratio_h") return jdvol::Regime::ratio_h;
    if (name == "stationary") return jdvol::Regime::stationary;
    throw std::invalid_argument("--regime must be small_h, ratio_h, or stationary");
}

struct ResolvedBandwidths {
    double h = 0.0;
    double eps = 0.0;
    std::string source;
};

// Plug-in resolution from a pilot run with the default sample-scale rules; the
// reference point is the reliable grid point with the most local time. Falls
// back to the rule-of-thumb scale (flagged) when the plug-in optimum is
// undefined there.
ResolvedBandwidths auto_bandwidths(const jdvol::SamplePath& path,
                                   const jdvol::KernelSpec& kernel,
                                   const std::string& kernel_name, double phi) {
    jdvol::EstimatorConfig pilot_cfg;
    pilot_cfg.kernel = kernel_name;
    pilot_cfg = jdvol::resolve_config(path, pilot_cfg);
    const std::vector<jdvol::MomentEstimate> pilot =
        jdvol::double_smoothed_moments(path, pilot_cfg);
    const jdvol::MomentEstimate* ref = nullptr;
    for (const jdvol::MomentEstimate& est : pilot) {
        if (est.reliable && std::isfinite(est.m2) &&
            (ref == nullptr || est.local_time > ref->local_time)) {
            ref = &est;
        }
    }
    if (ref == nullptr) {
        throw jdvol::NumericalError(
            "bandwidth plug-in: pilot estimate has no reliable grid point");
    }
    ResolvedBandwidths out;
    try {
        const jdvol::BiasInputs inputs =
            jdvol::empirical_bias_inputs(pilot, path, ref->x, kernel);
        const double bracket = 0.5 * inputs.m2_d2 + inputs.m2_d1 * inputs.score;
        const jdvol::BandwidthChoice choice =
            jdvol::optimal_bandwidth(ref->m4, bracket, ref->local_time, kernel, phi);
        out.h = choice.h;
        out.eps = choice.eps;
        out.source = "plug-in";
    } catch (const jdvol::NumericalError&) {
        out.h = jdvol::rule_of_thumb_bandwidth(path);
        out.eps = out.h / phi;
        out.source = "fallback-heuristic";
    }
    return out;
}

int run_simulate(const std::string& model_name, const std::vector<std::string>& params,
                 long n, double delta, double x0, int substeps, unsigned long long seed,
                 const std::string& out_file) {
    const jdvol::ModelSpec model =
        jdvol::builtin_model(model_name, parse_param_list(params));
    jdvol::SimConfig cfg;
    cfg.x0 = x0;
    cfg.n = n;
    cfg.delta = delta;
    cfg.substeps = substeps;
    cfg.seed = seed;
    jdvol::SimDiagnostics diag;
    const jdvol::SamplePath path = jdvol::simulate_path(model, cfg, &diag);

    HeaderLines header;
    header.emplace_back("version", jdvol::version_string);
    header.emplace_back("command", "simulate");
    header.emplace_back("model", model_name);
    std::string resolved;
    for (const auto& [key, value] : model.params) {
        if (!resolved.empty()) resolved += ' ';
        resolved += key + "=" + format_double(value);
    }
    header.emplace_back("params", resolved);
    header.emplace_back("n", std::to_string(n));
    header.emplace_back("delta", format_double(delta));
    header.emplace_back("x0", format_double(x0));
    header.emplace_back("substeps", std::to_string(substeps));
    header.emplace_back("seed", std::to_string(seed));
    header.emplace_back("boundary_exits", std::to_string(diag.boundary_exits));
    header.emplace_back("compensator",
                        diag.compensator_approximate ? "monte-carlo" : "analytic");
    emit(jdvol::path_csv(path, header), out_file);
    return 0;
}

struct EstimateOpts {
    SourceOpts source;
    std::string kernel = "epanechnikov";
    std::string engine = "fast";
    double h = 0.0;
    double eps = 0.0;
    double grid_min = 0.0, grid_max = 0.0;
    bool has_grid_min = false, has_grid_max = false;
    int grid_count = 25;
    double min_local_time = -1.0;
    std::string regime = "small_h";
    double phi = 1.0;
    double alpha = 0.05;
    std::string out_file;
};

int run_estimate(const EstimateOpts& opts) {
    HeaderLines header;
    header.emplace_back("version", jdvol::version_string);
    header.emplace_back("command", "estimate");
    const jdvol::SamplePath path = load_path(opts.source, header);
    const jdvol::KernelSpec& kernel = jdvol::kernel_by_name(opts.kernel);
    const jdvol::Regime regime = parse_regime(opts.regime);
    if (regime == jdvol::Regime::ratio_h && !(opts.phi > 0.0)) {
        throw std::invalid_argument("--regime ratio_h requires --phi > 0");
    }

    jdvol::EstimatorConfig cfg;
    cfg.kernel = opts.kernel;
    cfg.min_local_time = opts.min_local_time;
    if (opts.engine == "fast") cfg.engine = jdvol::Engine::fast;
    else if (opts.engine == "naive") cfg.engine = jdvol::Engine::naive;
    else throw std::invalid_argument("--engine must be fast or naive");

    std::string bw_source;
    if (opts.h > 0.0 && opts.eps > 0.0) {
        cfg.h = opts.h;
        cfg.eps = opts.eps;
        bw_source = "explicit";
    } else if (opts.h > 0.0) {
        cfg.h = opts.h;
        cfg.eps = opts.h / opts.phi;
        bw_source = "derived-from-phi";
    } else if (opts.eps > 0.0) {
        cfg.eps = opts.eps;
        cfg.h = opts.phi * opts.eps;
        bw_source = "derived-from-phi";
    } else {
        const ResolvedBandwidths bw = auto_bandwidths(path, kernel, opts.kernel, opts.phi);
        cfg.h = bw.h;
        cfg.eps = bw.eps;
        bw_source = bw.source;
    }

    if (opts.has_grid_min != opts.has_grid_max) {
        throw std::invalid_argument("--grid-min and --grid-max must be given together");
    }
    if (opts.grid_count < 1) throw std::invalid_argument("--grid-count must be >= 1");
    if (opts.has_grid_min) {
        if (!(opts.grid_max >= opts.grid_min)) {
            throw std::invalid_argument("--grid-max must be >= --grid-min");
        }
        cfg.grid.resize(opts.grid_count);
        for (int g = 0; g < opts.grid_count; ++g) {
            const double frac =
                opts.grid_count == 1 ? 0.5 : static_cast<double>(g) / (opts.grid_count - 1);
            cfg.grid[g] = opts.grid_min + frac * (opts.grid_max - opts.grid_min);
        }
    } else {
        cfg.grid = jdvol::default_grid(path, opts.grid_count);
    }
    cfg = jdvol::resolve_config(path, cfg);

    const std::vector<jdvol::MomentEstimate> estimates =
        jdvol::double_smoothed_moments(path, cfg);
    const double theta =
        regime == jdvol::Regime::ratio_h ? jdvol::theta_phi(kernel, opts.phi) : 1.0;

    long bias_fallback_rows = 0;
    std::vector<jdvol::EstimateRow> rows;
    rows.reserve(estimates.size());
    for (const jdvol::MomentEstimate& est : estimates) {
        jdvol::EstimateRow row;
        row.x = est.x;
        row.m2 = est.m2;
        row.m4 = est.m4;
        row.local_time = est.local_time;
        row.reliable = est.reliable;
        if (est.reliable && est.local_time > 0.0 && std::isfinite(est.m2)) {
            double gamma = 0.0;
            try {
                const jdvol::BiasInputs inputs =
                    jdvol::empirical_bias_inputs(estimates, path, est.x, kernel);
                gamma = regime == jdvol::Regime::ratio_h
                            ? jdvol::bias_constant(inputs, jdvol::Regime::ratio_h, kernel,
                                                   opts.phi)
                            : jdvol::bias_constant(inputs, jdvol::Regime::small_h, kernel);
            } catch (const jdvol::NumericalError&) {
                ++bias_fallback_rows;  // no usable stencil: report the raw estimate
            }
            jdvol::InferenceResult ci = jdvol::confidence_interval(
                est.m2, est.m4, gamma, cfg.eps, est.local_time, opts.alpha, regime, theta);
            ci.x = est.x;
            row.m2_corrected = ci.m2_corrected;
            row.std_error = ci.std_error;
            row.ci_low = ci.ci_low;
            row.ci_high = ci.ci_high;
        } else {
            const double nan = std::nan("");
            row.m2_corrected = nan;
            row.std_error = nan;
            row.ci_low = nan;
            row.ci_high = nan;
            row.reliable = false;
        }
        rows.push_back(row);
    }

    header.emplace_back("kernel", opts.kernel);
    header.emplace_back("engine", opts.engine);
    header.emplace_back("h", format_double(cfg.h));
    header.emplace_back("eps", format_double(cfg.eps));
    header.emplace_back("bandwidth_source", bw_source);
    header.emplace_back("regime", opts.regime);
    header.emplace_back("phi", format_double(opts.phi));
    header.emplace_back("alpha", format_double(opts.alpha));
    header.emplace_back("grid_count", std::to_string(cfg.grid.size()));
    header.emplace_back("min_local_time", format_double(cfg.min_local_time));
    header.emplace_back("bias_fallback_rows", std::to_string(bias_fallback_rows));
    emit(jdvol::estimate_csv(rows, header), opts.out_file);
    return 0;
}

int run_mc_study(const std::string& plan_file, const std::string& out_prefix) {
    const jdvol::ExperimentPlan plan = jdvol::parse_plan_file(plan_file);
    const jdvol::ExperimentReport report = plan.regime == jdvol::PlanRegime::bn_comparison
                                               ? jdvol::compare_with_bn(plan)
                                               : jdvol::run_experiment(plan);
    const std::string text = jdvol::report_to_text(report);
    std::fputs(text.c_str(), stdout);
    if (!out_prefix.empty()) {
        jdvol::write_text_file(out_prefix + ".txt", text);
        jdvol::write_text_file(out_prefix + "-rungs.csv", jdvol::report_rungs_csv(report));
    }
    return 0;
}

struct BandwidthOpts {
    SourceOpts source;
    std::string kernel = "epanechnikov";
    double phi = 1.0;
    double x = 0.0;
    bool has_x = false;
};

int run_bandwidth(const BandwidthOpts& opts) {
    HeaderLines header;
    const jdvol::SamplePath path = load_path(opts.source, header);
    const jdvol::KernelSpec& kernel = jdvol::kernel_by_name(opts.kernel);
    if (!(opts.phi > 0.0)) throw std::invalid_argument("--phi must be positive");

    jdvol::EstimatorConfig pilot_cfg;
    pilot_cfg.kernel = opts.kernel;
    pilot_cfg = jdvol::resolve_config(path, pilot_cfg);
    const std::vector<jdvol::MomentEstimate> pilot =
        jdvol::double_smoothed_moments(path, pilot_cfg);

    const jdvol::MomentEstimate* ref = nullptr;
    for (const jdvol::MomentEstimate& est : pilot) {
        if (!est.reliable || !std::isfinite(est.m2)) continue;
        if (opts.has_x) {
            if (ref == nullptr || std::abs(est.x - opts.x) < std::abs(ref->x - opts.x)) {
                ref = &est;
            }
        } else if (ref == nullptr || est.local_time > ref->local_time) {
            ref = &est;
        }
    }
    if (ref == nullptr) {
        throw jdvol::NumericalError("bandwidth: pilot estimate has no reliable grid point");
    }

    std::printf("x=%s\n", format_double(ref->x).c_str());
    std::printf("pilot_h=%s\n", format_double(pilot_cfg.h).c_str());
    std::printf("pilot_eps=%s\n", format_double(pilot_cfg.eps).c_str());
    std::printf("m4_hat=%s\n", format_double(ref->m4).c_str());
    std::printf("local_time=%s\n", format_double(ref->local_time).c_str());
    try {
        const jdvol::BiasInputs inputs =
            jdvol::empirical_bias_inputs(pilot, path, ref->x, kernel);
        const double bracket = 0.5 * inputs.m2_d2 + inputs.m2_d1 * inputs.score;
        const jdvol::BandwidthChoice choice =
            jdvol::optimal_bandwidth(ref->m4, bracket, ref->local_time, kernel, opts.phi);
        std::printf("bracket=%s\n", format_double(bracket).c_str());
        std::printf("h_opt=%s\n", format_double(choice.h).c_str());
        std::printf("eps_opt=%s\n", format_double(choice.eps).c_str());
        std::printf("source=plug-in\n");
    } catch (const jdvol::NumericalError&) {
        const double h = jdvol::rule_of_thumb_bandwidth(path);
        std::printf("h_opt=%s\n", format_double(h).c_str());
        std::printf("eps_opt=%s\n", format_double(h / opts.phi).c_str());
        std::printf("source=fallback-heuristic\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"double-smoothed conditional volatility estimation for jump diffusions"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "print help");
    app.set_version_flag("--version", jdvol::version_string);

    // simulate
    auto* sim = app.add_subcommand("simulate", "simulate a built-in model to CSV");
    std::string sim_model = "ou-jump";
    std::vector<std::string> sim_params;
    long sim_n = 10000;
    double sim_delta = 0.01, sim_x0 = 0.0;
    int sim_substeps = 10;
    unsigned long long sim_seed = 1;
    std::string sim_out;
    sim->add_option("--model", sim_model, "built-in model name")->required();
    sim->add_option("--param", sim_params, "parameter override name=value");
    sim->add_option("--n", sim_n, "number of increments")->required();
    sim->add_option("--delta", sim_delta, "observation spacing")->required();
    sim->add_option("--x0", sim_x0, "initial state");
    sim->add_option("--substeps", sim_substeps, "Euler substeps per observation");
    sim->add_option("--seed", sim_seed, "random seed");
    sim->add_option("--out", sim_out, "output file (default stdout)");

    // estimate
    auto* est = app.add_subcommand("estimate", "estimate conditional moments on a grid");
    est->set_help_flag("--help", "print help");
    EstimateOpts est_opts;
    add_source_options(est, est_opts.source);
    est->add_option("--kernel", est_opts.kernel, "smoothing kernel");
    est->add_option("--engine", est_opts.engine, "neighbor engine: fast or naive");
    est->add_option("--h", est_opts.h, "outer kernel bandwidth (omit for plug-in)");
    est->add_option("--eps", est_opts.eps, "neighborhood half-width (omit for plug-in)");
    est->add_option("--grid-min", est_opts.grid_min, "lowest grid point")
        ->each([&est_opts](const std::string&) { est_opts.has_grid_min = true; });
    est->add_option("--grid-max", est_opts.grid_max, "highest grid point")
        ->each([&est_opts](const std::string&) { est_opts.has_grid_max = true; });
    est->add_option("--grid-count", est_opts.grid_count, "number of grid points");
    est->add_option("--min-local-time", est_opts.min_local_time,
                    "reliability floor for local time");
    est->add_option("--regime", est_opts.regime, "small_h, ratio_h, or stationary");
    est->add_option("--phi", est_opts.phi, "bandwidth ratio h/eps");
    est->add_option("--alpha", est_opts.alpha, "confidence level complement");
    est->add_option("--out", est_opts.out_file, "output file (default stdout)");

    // mc-study
    auto* mc = app.add_subcommand("mc-study", "run a Monte Carlo experiment plan");
    std::string mc_plan, mc_out;
    mc->add_option("--plan", mc_plan, "plan file")->required();
    mc->add_option("--out", mc_out, "output prefix for .txt and -rungs.csv");

    // theta
    auto* th = app.add_subcommand("theta", "smoothing-overlap variance constant");
    std::string th_kernel = "epanechnikov";
    double th_phi = 1.0;
    th->add_option("--kernel", th_kernel, "kernel name");
    th->add_option("--phi", th_phi, "bandwidth ratio h/eps")->required();

    // bandwidth
    auto* bw = app.add_subcommand("bandwidth", "plug-in bandwidth from a pilot estimate");
    BandwidthOpts bw_opts;
    add_source_options(bw, bw_opts.source);
    bw->add_option("--kernel", bw_opts.kernel, "kernel name");
    bw->add_option("--phi", bw_opts.phi, "bandwidth ratio h/eps");
    bw->add_option("--x", bw_opts.x, "evaluation level (default: best-covered grid point)")
        ->each([&bw_opts](const std::string&) { bw_opts.has_x = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) {
            return run_simulate(sim_model, sim_params, sim_n, sim_delta, sim_x0,
                                sim_substeps, sim_seed, sim_out);
        }
        if (est->parsed()) return run_estimate(est_opts);
        if (mc->parsed()) return run_mc_study(mc_plan, mc_out);
        if (th->parsed()) {
            const jdvol::KernelSpec& kernel = jdvol::kernel_by_name(th_kernel);
            std::printf("%s\n", format_double(jdvol::theta_phi(kernel, th_phi)).c_str());
            return 0;
        }
        if (bw->parsed()) return run_bandwidth(bw_opts);
        std::fprintf(stderr, "error: no subcommand selected\n");
        return 1;
    } catch (const jdvol::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::ios_base::failure& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const jdvol::SimulationError& e) {
        std::fprintf(stderr, "error: %s (step %ld)\n", e.what(), e.step_index);
        return 3;
    } catch (const jdvol::NumericalError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
