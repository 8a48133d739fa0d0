#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vid2scenic/features/similarity.hpp"
#include "vid2scenic/frames/frame_pack.hpp"
#include "vid2scenic/scenic/diagnostic.hpp"
#include "vid2scenic/sim/simulator.hpp"

namespace vid2scenic::pipeline {

enum class Outcome { accepted, budget_exhausted, validation_failed, simulation_failed, gateway_failed };
std::string_view to_string(Outcome o);
Outcome outcome_from_string(std::string_view s);
inline constexpr Outcome kAllOutcomes[] = {Outcome::accepted, Outcome::budget_exhausted, Outcome::validation_failed,
                                           Outcome::simulation_failed, Outcome::gateway_failed};

/// Seconds spent per stage of one iteration.
struct IterationTimings {
    double gateway_s = 0.0;     // script generation, repairs included
    double simulation_s = 0.0;
    double extraction_s = 0.0;  // sim frame pack + FeatureGPT
    double total() const { return gateway_s + simulation_s + extraction_s; }
};

struct IterationRecord {
    int index = 1;  // 1-based
    /// Text of the script the iteration went on with (or, on
    /// validation_failed, the last rejected repair). Lives in
    /// iter_NN/script.scenic; run.json only references it.
    std::string script;
    int line_count = 0;
    std::vector<scenic::Diagnostic> validation;
    int repairs = 0;  // validation-triggered regenerations
    std::optional<sim::SimResult> sim;
    std::optional<features::FeatureVector> sim_features;
    std::optional<features::SimilarityReport> report;
    std::optional<std::string> feedback_out;
    IterationTimings timings;
};

struct RunError {
    std::string stage;
    std::string message;
};

struct RunState {
    std::string run_id;
    std::uint64_t seed = 0;
    frames::VideoRef input_video;
    std::optional<features::FeatureVector> real_features;
    std::vector<IterationRecord> iterations;
    std::optional<Outcome> outcome;  // unset while the run is in progress
    std::optional<RunError> error;
    nlohmann::json config = nlohmann::json::object();
    std::string created_at;
    std::string updated_at;
    std::optional<std::string> finished_at;
    double input_s = 0.0;  // input frame pack + real feature extraction

    double wall_time_s() const;
};

/// Iteration directory name, `iter_01` etc.
std::string iteration_dir_name(int index);

/// Manifest form. Scripts are stored as paths relative to the run dir.
nlohmann::json to_json(const RunState& s);

class RunLoadError : public std::runtime_error {
public:
    RunLoadError(const std::filesystem::path& file, const std::string& why);
    const std::filesystem::path& file() const { return file_; }

private:
    std::filesystem::path file_;
};

/// Reads `<dir>/run.json` and the scripts it references. Throws
/// RunLoadError naming the offending file when anything is missing,
/// truncated or inconsistent.
RunState load_run(const std::filesystem::path& run_dir);

/// Atomically rewrites `<dir>/run.json` (updated_at is refreshed).
void save_run(RunState& s, const std::filesystem::path& run_dir);

/// ISO-8601 UTC timestamp of now, e.g. 2026-01-31T12:00:00Z.
std::string utc_now();

}  // namespace vid2scenic::pipeline
