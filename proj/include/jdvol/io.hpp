#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "jdvol/mc.hpp"
#include "jdvol/model.hpp"

namespace jdvol {

struct TickSeries {
    std::vector<double> timestamps;  // strictly increasing
    std::vector<double> prices;
    std::string source;
};

struct ColumnSpec {
    std::string time_col = "time";
    std::string price_col = "value";
};

struct IngestOptions {
    ColumnSpec columns;
    // Present: previous-tick resample onto t0 + k*delta. Absent: native spacing
    // must be uniform within 1e-6 relative.
    std::optional<double> resample_delta;
    bool log_prices = false;
};

// Shortest decimal representation that round-trips the exact double.
std::string format_double(double value);

// CSV with a header row naming the columns; '#'-prefixed lines are comments.
// Errors cite 1-based data-row numbers.
TickSeries read_ticks(const std::string& file, const ColumnSpec& columns);

SamplePath ticks_to_path(const TickSeries& ticks, const IngestOptions& options);

SamplePath ingest_csv(const std::string& file, const IngestOptions& options);

using HeaderLines = std::vector<std::pair<std::string, std::string>>;

// "# key: value" comment block, then "time,value" rows at k*delta.
std::string path_csv(const SamplePath& path, const HeaderLines& header);
void write_path_csv(const std::string& file, const SamplePath& path,
                    const HeaderLines& header);

struct EstimateRow {
    double x = 0.0;
    double m2 = 0.0;
    double m2_corrected = 0.0;
    double m4 = 0.0;
    double local_time = 0.0;
    double std_error = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    bool reliable = false;
};

std::string estimate_csv(const std::vector<EstimateRow>& rows, const HeaderLines& header);

// Flat key = value plan text; '#' starts a comment, rungs are "n:delta" pairs
// separated by commas, model parameters use "model.<name>" keys. Semantic plan
// violations surface as ParseError carrying the origin label.
ExperimentPlan parse_plan_text(const std::string& text, const std::string& origin);
ExperimentPlan parse_plan_file(const std::string& file);

std::string report_to_text(const ExperimentReport& report);
std::string report_rungs_csv(const ExperimentReport& report);

std::string read_text_file(const std::string& file);
void write_text_file(const std::string& file, const std::string& content);

}
