#include "jdvol/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "jdvol/errors.hpp"
#include "jdvol/version.hpp"

namespace jdvol {
namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

bool parse_double_cell(const std::string& cell, double& out) {
    const std::string t = trim(cell);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

bool parse_long_cell(const std::string& cell, long long& out) {
    const std::string t = trim(cell);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

TickSeries read_ticks(const std::string& file, const ColumnSpec& columns) {
    std::ifstream in(file);
    if (!in) throw ParseError("cannot open '" + file + "'");

    std::string line;
    bool have_header = false;
    std::size_t time_idx = 0, price_idx = 0, need_cols = 0;
    TickSeries ticks;
    ticks.source = file;
    long data_row = 0;

    while (std::getline(in, line)) {
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        std::vector<std::string> cells = split(line, ',');
        if (!have_header) {
            bool found_time = false, found_price = false;
            for (std::size_t c = 0; c < cells.size(); ++c) {
                const std::string name = trim(cells[c]);
                if (name == columns.time_col) {
                    time_idx = c;
                    found_time = true;
                }
                if (name == columns.price_col) {
                    price_idx = c;
                    found_price = true;
                }
            }
            if (!found_time || !found_price) {
                std::string names;
                for (std::size_t c = 0; c < cells.size(); ++c) {
                    if (c) names += ", ";
                    names += "'" + trim(cells[c]) + "'";
                }
                throw ParseError("'" + file + "': header lacks column '" +
                                 (found_time ? columns.price_col : columns.time_col) +
                                 "' (found " + names + ")");
            }
            need_cols = std::max(time_idx, price_idx) + 1;
            have_header = true;
            continue;
        }
        ++data_row;
        if (cells.size() < need_cols) {
            throw ParseError("'" + file + "': data row " + std::to_string(data_row) +
                             " has " + std::to_string(cells.size()) + " columns, need " +
                             std::to_string(need_cols));
        }
        double t, p;
        if (!parse_double_cell(cells[time_idx], t)) {
            throw ParseError("'" + file + "': data row " + std::to_string(data_row) +
                             ", column '" + columns.time_col + "': cannot parse '" +
                             trim(cells[time_idx]) + "'");
        }
        if (!parse_double_cell(cells[price_idx], p)) {
            throw ParseError("'" + file + "': data row " + std::to_string(data_row) +
                             ", column '" + columns.price_col + "': cannot parse '" +
                             trim(cells[price_idx]) + "'");
        }
        if (!ticks.timestamps.empty() && !(t > ticks.timestamps.back())) {
            throw ParseError("'" + file + "': non-monotone timestamp at data row " +
                             std::to_string(data_row));
        }
        ticks.timestamps.push_back(t);
        ticks.prices.push_back(p);
    }
    if (!have_header) throw ParseError("'" + file + "': missing header row");
    if (ticks.timestamps.size() < 2) {
        throw ParseError("'" + file + "': need at least 2 data rows");
    }
    return ticks;
}

SamplePath ticks_to_path(const TickSeries& ticks, const IngestOptions& options) {
    if (ticks.timestamps.size() != ticks.prices.size() || ticks.timestamps.size() < 2) {
        throw std::invalid_argument("ticks_to_path: malformed tick series");
    }
    std::vector<double> levels(ticks.prices);
    if (options.log_prices) {
        for (std::size_t k = 0; k < levels.size(); ++k) {
            if (!(levels[k] > 0.0)) {
                throw ParseError("'" + ticks.source + "': data row " + std::to_string(k + 1) +
                                 ": nonpositive price " + format_double(levels[k]) +
                                 " cannot be log-transformed");
            }
            levels[k] = std::log(levels[k]);
        }
    }

    const std::vector<double>& t = ticks.timestamps;
    SamplePath path;
    if (options.resample_delta.has_value()) {
        const double delta = *options.resample_delta;
        if (!(delta > 0.0)) {
            throw std::invalid_argument("ticks_to_path: resample interval must be positive");
        }
        const long steps = static_cast<long>(std::floor((t.back() - t.front()) / delta + 1e-9));
        if (steps < 1) {
            throw ParseError("'" + ticks.source + "': resample interval " +
                             format_double(delta) + " exceeds the data span");
        }
        path.values.reserve(steps + 1);
        std::size_t j = 0;
        for (long k = 0; k <= steps; ++k) {
            const double grid_time = t.front() + k * delta;
            while (j + 1 < t.size() && t[j + 1] <= grid_time) ++j;
            path.values.push_back(levels[j]);
        }
        path.delta = delta;
        path.n = steps;
        return path;
    }

    const double gap0 = t[1] - t[0];
    for (std::size_t k = 1; k + 1 < t.size(); ++k) {
        const double gap = t[k + 1] - t[k];
        if (std::abs(gap - gap0) > 1e-6 * gap0) {
            throw ParseError("'" + ticks.source + "': non-uniform spacing between data rows " +
                             std::to_string(k + 1) + " and " + std::to_string(k + 2) +
                             ": gap " + format_double(gap) + ", expected " +
                             format_double(gap0) + "; pass a resample interval");
        }
    }
    path.values = std::move(levels);
    path.n = static_cast<long>(path.values.size()) - 1;
    path.delta = (t.back() - t.front()) / static_cast<double>(path.n);
    return path;
}

SamplePath ingest_csv(const std::string& file, const IngestOptions& options) {
    return ticks_to_path(read_ticks(file, options.columns), options);
}

std::string path_csv(const SamplePath& path, const HeaderLines& header) {
    std::string out;
    for (const auto& [key, value] : header) {
        out += "# " + key + ": " + value + "\n";
    }
    out += "time,value\n";
    for (long k = 0; k <= path.n; ++k) {
        out += format_double(k * path.delta);
        out += ',';
        out += format_double(path.values[k]);
        out += '\n';
    }
    return out;
}

void write_path_csv(const std::string& file, const SamplePath& path,
                    const HeaderLines& header) {
    write_text_file(file, path_csv(path, header));
}

std::string estimate_csv(const std::vector<EstimateRow>& rows, const HeaderLines& header) {
    std::string out;
    for (const auto& [key, value] : header) {
        out += "# " + key + ": " + value + "\n";
    }
    out += "x,m2,m2_corrected,m4,local_time,std_error,ci_low,ci_high,reliable\n";
    for (const EstimateRow& row : rows) {
        out += format_double(row.x);
        out += ',' + format_double(row.m2);
        out += ',' + format_double(row.m2_corrected);
        out += ',' + format_double(row.m4);
        out += ',' + format_double(row.local_time);
        out += ',' + format_double(row.std_error);
        out += ',' + format_double(row.ci_low);
        out += ',' + format_double(row.ci_high);
        out += row.reliable ? ",1\n" : ",0\n";
    }
    return out;
}

namespace {

double plan_double(const std::string& value, const std::string& key,
                   const std::string& origin, long line) {
    double out;
    if (!parse_double_cell(value, out)) {
        throw ParseError(origin + ": line " + std::to_string(line) + ": key '" + key +
                         "': cannot parse number '" + value + "'");
    }
    return out;
}

long long plan_long(const std::string& value, const std::string& key,
                    const std::string& origin, long line) {
    long long out;
    if (!parse_long_cell(value, out)) {
        throw ParseError(origin + ": line " + std::to_string(line) + ": key '" + key +
                         "': cannot parse integer '" + value + "'");
    }
    return out;
}

bool plan_bool(const std::string& value, const std::string& key, const std::string& origin,
               long line) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ParseError(origin + ": line " + std::to_string(line) + ": key '" + key +
                     "': expected true or false, got '" + value + "'");
}

constexpr const char* plan_keys =
    "name, model, model.<param>, rungs, replications, x, x0, seed_base, regime, phi, "
    "kernel, substeps, alpha, share_paths, eps_power_diag, bandwidth, eps_c, eps_pow, "
    "h_c, h_pow, bn_h_c, bn_h_pow, h_match_bn";

}  // namespace

ExperimentPlan parse_plan_text(const std::string& text, const std::string& origin) {
    ExperimentPlan plan;
    plan.ladder.clear();

    std::istringstream in(text);
    std::string raw;
    long line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(origin + ": line " + std::to_string(line_no) +
                             ": expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ParseError(origin + ": line " + std::to_string(line_no) +
                             ": empty key or value");
        }

        if (key == "name") {
            plan.name = value;
        } else if (key == "model") {
            plan.model = value;
        } else if (key.rfind("model.", 0) == 0) {
            const std::string param = key.substr(6);
            if (param.empty()) {
                throw ParseError(origin + ": line " + std::to_string(line_no) +
                                 ": empty model parameter name");
            }
            plan.model_params[param] = plan_double(value, key, origin, line_no);
        } else if (key == "rungs") {
            for (const std::string& item : split(value, ',')) {
                const std::string pair = trim(item);
                const std::size_t colon = pair.find(':');
                if (colon == std::string::npos) {
                    throw ParseError(origin + ": line " + std::to_string(line_no) +
                                     ": rung '" + pair + "' must be 'n:delta'");
                }
                LadderRung rung;
                rung.n = static_cast<long>(
                    plan_long(pair.substr(0, colon), "rungs", origin, line_no));
                rung.delta = plan_double(pair.substr(colon + 1), "rungs", origin, line_no);
                plan.ladder.push_back(rung);
            }
        } else if (key == "replications") {
            plan.replications = static_cast<long>(plan_long(value, key, origin, line_no));
        } else if (key == "x") {
            plan.x = plan_double(value, key, origin, line_no);
        } else if (key == "x0") {
            plan.x0 = plan_double(value, key, origin, line_no);
        } else if (key == "seed_base") {
            plan.seed_base =
                static_cast<unsigned long long>(plan_long(value, key, origin, line_no));
        } else if (key == "regime") {
            if (value == "small_h") plan.regime = PlanRegime::small_h;
            else if (value == "ratio_h") plan.regime = PlanRegime::ratio_h;
            else if (value == "stationary") plan.regime = PlanRegime::stationary;
            else if (value == "bn_comparison") plan.regime = PlanRegime::bn_comparison;
            else
                throw ParseError(origin + ": line " + std::to_string(line_no) +
                                 ": unknown regime '" + value +
                                 "' (small_h, ratio_h, stationary, bn_comparison)");
        } else if (key == "phi") {
            plan.phi = plan_double(value, key, origin, line_no);
        } else if (key == "kernel") {
            plan.kernel = value;
        } else if (key == "substeps") {
            plan.substeps = static_cast<int>(plan_long(value, key, origin, line_no));
        } else if (key == "alpha") {
            plan.alpha = plan_double(value, key, origin, line_no);
        } else if (key == "share_paths") {
            plan.share_paths = plan_bool(value, key, origin, line_no);
        } else if (key == "eps_power_diag") {
            plan.eps_power_diag = plan_double(value, key, origin, line_no);
        } else if (key == "bandwidth") {
            if (value == "power") plan.bandwidth.mode = BandwidthMode::power;
            else if (value == "default") plan.bandwidth.mode = BandwidthMode::path_default;
            else
                throw ParseError(origin + ": line " + std::to_string(line_no) +
                                 ": unknown bandwidth mode '" + value + "' (power, default)");
        } else if (key == "eps_c") {
            plan.bandwidth.eps_c = plan_double(value, key, origin, line_no);
        } else if (key == "eps_pow") {
            plan.bandwidth.eps_pow = plan_double(value, key, origin, line_no);
        } else if (key == "h_c") {
            plan.bandwidth.h_c = plan_double(value, key, origin, line_no);
        } else if (key == "h_pow") {
            plan.bandwidth.h_pow = plan_double(value, key, origin, line_no);
        } else if (key == "bn_h_c") {
            plan.bandwidth.bn_h_c = plan_double(value, key, origin, line_no);
        } else if (key == "bn_h_pow") {
            plan.bandwidth.bn_h_pow = plan_double(value, key, origin, line_no);
        } else if (key == "h_match_bn") {
            plan.bandwidth.h_match_bn = plan_bool(value, key, origin, line_no);
        } else {
            throw ParseError(origin + ": line " + std::to_string(line_no) +
                             ": unknown key '" + key + "'; valid keys: " + plan_keys);
        }
    }

    try {
        validate_plan(plan);
        builtin_model(plan.model, plan.model_params);
    } catch (const std::invalid_argument& e) {
        throw ParseError(origin + ": " + e.what());
    }
    return plan;
}

ExperimentPlan parse_plan_file(const std::string& file) {
    return parse_plan_text(read_text_file(file), file);
}

namespace {

const char* regime_name(PlanRegime regime) {
    switch (regime) {
        case PlanRegime::small_h: return "small_h";
        case PlanRegime::ratio_h: return "ratio_h";
        case PlanRegime::stationary: return "stationary";
        case PlanRegime::bn_comparison: return "bn_comparison";
    }
    return "?";
}

}  // namespace

std::string report_to_text(const ExperimentReport& report) {
    const ExperimentPlan& plan = report.plan;
    std::string out;
    out += "experiment: " + plan.name + "\n";
    out += "version: " + std::string(version_string) + "\n";
    out += "model: " + plan.model;
    for (const auto& [key, value] : plan.model_params) {
        out += " " + key + "=" + format_double(value);
    }
    out += "\n";
    out += "regime: " + std::string(regime_name(plan.regime)) + "\n";
    out += "kernel: " + plan.kernel + "\n";
    out += "x: " + format_double(plan.x) + "\n";
    out += "x0: " + format_double(plan.x0) + "\n";
    out += "replications: " + std::to_string(plan.replications) + "\n";
    out += "seed_base: " + std::to_string(plan.seed_base) + "\n";
    out += "substeps: " + std::to_string(plan.substeps) + "\n";
    out += "alpha: " + format_double(plan.alpha) + "\n";
    out += "phi: " + format_double(plan.phi) + "\n";
    if (plan.bandwidth.mode == BandwidthMode::power) {
        out += "bandwidth: power eps_c=" + format_double(plan.bandwidth.eps_c) +
               " eps_pow=" + format_double(plan.bandwidth.eps_pow) +
               " h_c=" + format_double(plan.bandwidth.h_c) +
               " h_pow=" + format_double(plan.bandwidth.h_pow);
    } else {
        out += "bandwidth: default";
    }
    if (plan.bandwidth.h_match_bn) out += " h_match_bn=true";
    out += "\n";
    out += "share_paths: " + std::string(plan.share_paths ? "true" : "false") + "\n";
    out += "target_m2: " + format_double(report.target_m2) + "\n";
    out += "target_m4: " + format_double(report.target_m4) + "\n";
    out += "theta: " + format_double(report.theta) + "\n";
    out += "bias_constant: " + format_double(report.bias_const) + "\n";
    for (const RungReport& rung : report.per_rung) {
        out += "rung n=" + std::to_string(rung.n) + " delta=" + format_double(rung.delta) +
               ": eps=" + format_double(rung.eps) + " h=" + format_double(rung.h) +
               " bias=" + format_double(rung.bias) + " sd=" + format_double(rung.sd) +
               " rmse=" + format_double(rung.rmse) +
               " median_rel_err=" + format_double(rung.median_abs_rel_err) +
               " mean_local_time=" + format_double(rung.mean_local_time) +
               " ks_stat=" + format_double(rung.ks_stat) +
               " ks_p=" + format_double(rung.ks_p) +
               " coverage=" + format_double(rung.coverage) +
               " eps_diag=" + format_double(rung.eps_diag_mean) +
               " modulus_median=" + format_double(rung.modulus_median) +
               " unreliable=" + std::to_string(rung.unreliable_reps) + "\n";
    }
    if (report.has_rate_fit) {
        out += "rate_fit: slope=" + format_double(report.rate_fit.slope) +
               " std_error=" + format_double(report.rate_fit.std_error) +
               " intercept=" + format_double(report.rate_fit.intercept) + "\n";
    }
    out += "eps_power_diagnostic(q=" + format_double(plan.eps_power_diag) +
           "): " + (report.eps_diag_warning ? "growing along the ladder" : "bounded") + "\n";
    if (report.has_comparison) {
        out += "comparison: mse_double=" + format_double(report.comparison.mse_double) +
               " mse_single=" + format_double(report.comparison.mse_single) +
               " ratio=" + format_double(report.comparison.ratio) + "\n";
    }
    return out;
}

std::string report_rungs_csv(const ExperimentReport& report) {
    std::string out =
        "n,delta,eps,h,bias,sd,rmse,median_abs_rel_err,mean_local_time,ks_stat,ks_p,"
        "coverage,eps_diag_mean,modulus_median,unreliable_reps\n";
    for (const RungReport& rung : report.per_rung) {
        out += std::to_string(rung.n);
        out += ',' + format_double(rung.delta);
        out += ',' + format_double(rung.eps);
        out += ',' + format_double(rung.h);
        out += ',' + format_double(rung.bias);
        out += ',' + format_double(rung.sd);
        out += ',' + format_double(rung.rmse);
        out += ',' + format_double(rung.median_abs_rel_err);
        out += ',' + format_double(rung.mean_local_time);
        out += ',' + format_double(rung.ks_stat);
        out += ',' + format_double(rung.ks_p);
        out += ',' + format_double(rung.coverage);
        out += ',' + format_double(rung.eps_diag_mean);
        out += ',' + format_double(rung.modulus_median);
        out += ',' + std::to_string(rung.unreliable_reps);
        out += '\n';
    }
    return out;
}

std::string read_text_file(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + file + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& file, const std::string& content) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + file + "'");
    out << content;
    if (!out) throw ParseError("write failed for '" + file + "'");
}

}
