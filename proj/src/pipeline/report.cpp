#include "vid2scenic/pipeline/report.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "vid2scenic/pipeline/run_state.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vid2scenic::pipeline {

std::string format_rate(double fraction) { return fmt::format("{:.1f}%", fraction * 100.0); }

AggregateReport build_report(const std::vector<fs::path>& run_dirs) {
    AggregateReport r;
    for (Outcome o : kAllOutcomes) r.outcomes[std::string(to_string(o))] = 0;

    double wall = 0, lines = 0, iterations = 0;
    StageMeans stages;
    for (const auto& dir : run_dirs) {
        RunState s;
        try {
            s = load_run(dir);
        } catch (const RunLoadError& e) {
            r.warnings.push_back(e.what());
            continue;
        }
        if (!s.outcome) {
            r.warnings.push_back(fmt::format("{}: run has not finished", dir.string()));
            continue;
        }
        ++r.total;
        ++r.outcomes[std::string(to_string(*s.outcome))];
        iterations += static_cast<double>(s.iterations.size());
        if (*s.outcome != Outcome::accepted) continue;
        ++r.accepted;
        if (s.iterations.size() >= 2) ++r.refined;
        wall += s.wall_time_s();
        stages.input_s += s.input_s;
        for (const auto& it : s.iterations) {
            stages.gateway_s += it.timings.gateway_s;
            stages.simulation_s += it.timings.simulation_s;
            stages.extraction_s += it.timings.extraction_s;
        }
        if (!s.iterations.empty()) lines += s.iterations.back().line_count;
    }
    if (r.total == 0) {
        std::string why = "no readable finished runs";
        for (const auto& w : r.warnings) why += "\n  " + w;
        throw ReportError(why);
    }
    r.automation_rate = static_cast<double>(r.accepted) / r.total;
    r.refinement_rate = static_cast<double>(r.refined) / r.total;
    r.mean_iterations = iterations / r.total;
    if (r.accepted > 0) {
        const double n = r.accepted;
        r.mean_wall_time_s = wall / n;
        r.mean_script_lines = lines / n;
        r.mean_stage_s = StageMeans{stages.input_s / n, stages.gateway_s / n, stages.simulation_s / n,
                                    stages.extraction_s / n};
    }
    return r;
}

json to_json(const AggregateReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json stages = nullptr;
    if (r.mean_stage_s) {
        stages = {{"input_s", r.mean_stage_s->input_s},
                  {"gateway_s", r.mean_stage_s->gateway_s},
                  {"simulation_s", r.mean_stage_s->simulation_s},
                  {"extraction_s", r.mean_stage_s->extraction_s}};
    }
    return {{"total_runs", r.total},
            {"accepted", r.accepted},
            {"automation_rate", r.automation_rate},
            {"automation_rate_text", format_rate(r.automation_rate)},
            {"outcomes", r.outcomes},
            {"refined", r.refined},
            {"refinement_rate", r.refinement_rate},
            {"refinement_rate_text", format_rate(r.refinement_rate)},
            {"mean_iterations", r.mean_iterations},
            {"mean_wall_time_s", opt(r.mean_wall_time_s)},
            {"mean_stage_s", stages},
            {"mean_script_lines", opt(r.mean_script_lines)},
            {"warnings", r.warnings}};
}

std::string format_table(const AggregateReport& r) {
    std::vector<std::array<std::string, 3>> rows;
    auto pct = [&](int n) { return format_rate(static_cast<double>(n) / r.total); };
    rows.push_back({"runs", std::to_string(r.total), ""});
    rows.push_back({"accepted (automation rate)", std::to_string(r.accepted), format_rate(r.automation_rate)});
    for (const auto& [name, n] : r.outcomes) {
        if (name != "accepted") rows.push_back({"  " + name, std::to_string(n), pct(n)});
    }
    rows.push_back({"refined (>= 2 iterations)", std::to_string(r.refined), format_rate(r.refinement_rate)});
    rows.push_back({"mean iterations", fmt::format("{:.2f}", r.mean_iterations), ""});
    auto secs = [](double v) { return fmt::format("{:.2f} s", v); };
    rows.push_back({"mean wall time (accepted)", r.mean_wall_time_s ? secs(*r.mean_wall_time_s) : "n/a", ""});
    if (r.mean_stage_s) {
        rows.push_back({"  input frames + features", secs(r.mean_stage_s->input_s), ""});
        rows.push_back({"  script generation", secs(r.mean_stage_s->gateway_s), ""});
        rows.push_back({"  simulation", secs(r.mean_stage_s->simulation_s), ""});
        rows.push_back({"  sim feature extraction", secs(r.mean_stage_s->extraction_s), ""});
    }
    rows.push_back({"mean script lines (accepted)",
                    r.mean_script_lines ? fmt::format("{:.1f}", *r.mean_script_lines) : "n/a", ""});

    std::size_t w0 = 0, w1 = 0;
    for (const auto& row : rows) {
        w0 = std::max(w0, row[0].size());
        w1 = std::max(w1, row[1].size());
    }
    std::string out;
    for (const auto& row : rows) {
        std::string line = fmt::format("{:<{}}  {:>{}}", row[0], w0, row[1], w1);
        if (!row[2].empty()) line += fmt::format("  {:>6}", row[2]);
        out += line + "\n";
    }
    if (!r.warnings.empty()) {
        out += "\nwarnings:\n";
        for (const auto& w : r.warnings) out += "  " + w + "\n";
    }
    return out;
}

}  // namespace vid2scenic::pipeline
