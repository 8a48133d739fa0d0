#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace vid2scenic::pipeline {

struct StageMeans {
    double input_s = 0.0;
    double gateway_s = 0.0;
    double simulation_s = 0.0;
    double extraction_s = 0.0;
};

struct AggregateReport {
    int total = 0;  // readable, finished runs
    int accepted = 0;
    std::map<std::string, int> outcomes;  // every outcome name, zeros included
    /// Accepted runs that needed at least two iterations.
    int refined = 0;
    double automation_rate = 0.0;  // accepted / total
    double refinement_rate = 0.0;  // refined / total
    std::optional<double> mean_wall_time_s;  // over accepted runs
    std::optional<StageMeans> mean_stage_s;  // over accepted runs
    std::optional<double> mean_script_lines;  // final script, accepted runs
    double mean_iterations = 0.0;             // over all counted runs
    std::vector<std::string> warnings;
};

class ReportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unreadable or unfinished run directories become warnings and are left
/// out of every denominator. Throws ReportError when nothing is left.
AggregateReport build_report(const std::vector<std::filesystem::path>& run_dirs);

/// "64.0%"
std::string format_rate(double fraction);

nlohmann::json to_json(const AggregateReport& r);
/// Aligned-column text table, one metric per row, warnings last.
std::string format_table(const AggregateReport& r);

}  // namespace vid2scenic::pipeline
