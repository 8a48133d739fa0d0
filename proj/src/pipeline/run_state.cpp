#include "vid2scenic/pipeline/run_state.hpp"

#include <chrono>
#include <ctime>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "vid2scenic/scenic/script.hpp"
#include "vid2scenic/util/fs.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vid2scenic::pipeline {

namespace {

constexpr const char* kSchema = "vid2scenic-run-v1";

json video_json(const frames::VideoRef& v) {
    return {{"path", v.path.string()}, {"frame_count", v.frame_count}, {"fps", v.fps}, {"duration_s", v.duration_s}};
}

frames::VideoRef video_from(const json& j) {
    return {j.at("path").get<std::string>(), j.at("frame_count").get<int>(), j.at("fps").get<double>(),
            j.at("duration_s").get<double>()};
}

template <typename T, typename F>
json opt(const std::optional<T>& v, F&& f) {
    return v ? f(*v) : json(nullptr);
}

bool present(const json& j, const char* key) { return j.contains(key) && !j[key].is_null(); }

}  // namespace

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::accepted: return "accepted";
        case Outcome::budget_exhausted: return "budget_exhausted";
        case Outcome::validation_failed: return "validation_failed";
        case Outcome::simulation_failed: return "simulation_failed";
        case Outcome::gateway_failed: return "gateway_failed";
    }
    return "gateway_failed";
}

Outcome outcome_from_string(std::string_view s) {
    for (Outcome o : kAllOutcomes) {
        if (to_string(o) == s) return o;
    }
    throw std::invalid_argument(fmt::format("unknown outcome '{}'", s));
}

double RunState::wall_time_s() const {
    double t = input_s;
    for (const auto& it : iterations) t += it.timings.total();
    return t;
}

std::string iteration_dir_name(int index) { return fmt::format("iter_{:02d}", index); }

std::string utc_now() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(t));
}

json to_json(const RunState& s) {
    json iters = json::array();
    for (const auto& it : s.iterations) {
        json diags = json::array();
        for (const auto& d : it.validation) diags.push_back(scenic::to_json(d));
        iters.push_back({{"index", it.index},
                         {"script_file", iteration_dir_name(it.index) + "/script.scenic"},
                         {"line_count", it.line_count},
                         {"validation", diags},
                         {"repairs", it.repairs},
                         {"sim", opt(it.sim, [](const auto& r) { return sim::to_json(r); })},
                         {"sim_features", opt(it.sim_features, [](const auto& v) { return features::to_json(v); })},
                         {"report", opt(it.report, [](const auto& r) { return features::to_json(r); })},
                         {"feedback", opt(it.feedback_out, [](const auto& f) { return json(f); })},
                         {"timings",
                          {{"gateway_s", it.timings.gateway_s},
                           {"simulation_s", it.timings.simulation_s},
                           {"extraction_s", it.timings.extraction_s},
                           {"total_s", it.timings.total()}}}});
    }
    return {{"schema", kSchema},
            {"run_id", s.run_id},
            {"seed", s.seed},
            {"input_video", video_json(s.input_video)},
            {"real_features", opt(s.real_features, [](const auto& v) { return features::to_json(v); })},
            {"iterations", iters},
            {"outcome", opt(s.outcome, [](Outcome o) { return json(to_string(o)); })},
            {"error", opt(s.error, [](const RunError& e) { return json{{"stage", e.stage}, {"message", e.message}}; })},
            {"config", s.config},
            {"created_at", s.created_at},
            {"updated_at", s.updated_at},
            {"finished_at", opt(s.finished_at, [](const auto& f) { return json(f); })},
            {"input_s", s.input_s},
            {"wall_time_s", s.wall_time_s()}};
}

RunLoadError::RunLoadError(const fs::path& file, const std::string& why)
    : std::runtime_error(fmt::format("{}: {}", file.string(), why)), file_(file) {}

RunState load_run(const fs::path& run_dir) {
    const fs::path manifest = run_dir / "run.json";
    json j;
    try {
        j = json::parse(util::read_file(manifest));
    } catch (const util::IoError& e) {
        throw RunLoadError(manifest, "cannot read manifest");
    } catch (const json::exception& e) {
        throw RunLoadError(manifest, std::string("not valid JSON (") + e.what() + ")");
    }
    RunState s;
    try {
        if (j.value("schema", "") != kSchema) throw std::runtime_error("unknown manifest schema");
        s.run_id = j.at("run_id").get<std::string>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.input_video = video_from(j.at("input_video"));
        if (present(j, "real_features")) s.real_features = features::feature_vector_from_json(j["real_features"]);
        if (present(j, "outcome")) s.outcome = outcome_from_string(j["outcome"].get<std::string>());
        if (present(j, "error"))
            s.error = RunError{j["error"].at("stage").get<std::string>(), j["error"].at("message").get<std::string>()};
        s.config = j.at("config");
        s.created_at = j.at("created_at").get<std::string>();
        s.updated_at = j.at("updated_at").get<std::string>();
        if (present(j, "finished_at")) s.finished_at = j["finished_at"].get<std::string>();
        s.input_s = j.value("input_s", 0.0);
        for (const auto& ij : j.at("iterations")) {
            IterationRecord it;
            it.index = ij.at("index").get<int>();
            it.line_count = ij.at("line_count").get<int>();
            for (const auto& d : ij.at("validation")) it.validation.push_back(scenic::diagnostic_from_json(d));
            it.repairs = ij.value("repairs", 0);
            if (present(ij, "sim")) it.sim = sim::sim_result_from_json(ij["sim"]);
            if (present(ij, "sim_features")) it.sim_features = features::feature_vector_from_json(ij["sim_features"]);
            if (present(ij, "report")) it.report = features::similarity_report_from_json(ij["report"]);
            if (present(ij, "feedback")) it.feedback_out = ij["feedback"].get<std::string>();
            const auto& t = ij.at("timings");
            it.timings = {t.value("gateway_s", 0.0), t.value("simulation_s", 0.0), t.value("extraction_s", 0.0)};
            s.iterations.push_back(std::move(it));
        }
    } catch (const RunLoadError&) {
        throw;
    } catch (const std::exception& e) {
        throw RunLoadError(manifest, std::string("malformed manifest: ") + e.what());
    }
    for (std::size_t i = 0; i < s.iterations.size(); ++i) {
        auto& it = s.iterations[i];
        if (it.index != static_cast<int>(i) + 1) throw RunLoadError(manifest, "iteration indices are not 1..n");
        const fs::path script = run_dir / iteration_dir_name(it.index) / "script.scenic";
        try {
            it.script = util::read_file(script);
        } catch (const util::IoError&) {
            throw RunLoadError(script, "script referenced by the manifest is missing");
        }
    }
    return s;
}

void save_run(RunState& s, const fs::path& run_dir) {
    s.updated_at = utc_now();
    util::write_file_atomic(run_dir / "run.json", to_json(s).dump(2) + "\n");
}

}  // namespace vid2scenic::pipeline
