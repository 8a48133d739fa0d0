#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include <json.hpp>

#include "vid2scenic/features/feature_vector.hpp"
#include "vid2scenic/frames/frame_pack.hpp"
#include "vid2scenic/gateway/gateway.hpp"
#include "vid2scenic/pipeline/run_state.hpp"
#include "vid2scenic/scenic/catalog.hpp"
#include "vid2scenic/sim/simulator.hpp"

namespace vid2scenic::pipeline {

struct EngineConfig {
    frames::FrameConfig frames;
    features::ThresholdConfig thresholds;
    scenic::Catalog catalog;
    int max_iterations = 5;
    /// Regenerations allowed per iteration when a script fails validation.
    int repair_attempts = 1;
    /// End the run as budget_exhausted as soon as a regenerated script's
    /// tree equals the previous iteration's.
    bool stop_on_stall = false;
    double max_sim_seconds = 20.0;
    /// Recorded as-is under "config" in run.json.
    nlohmann::json snapshot = nlohmann::json::object();
};

struct Backends {
    gateway::Gateway& gateway;
    sim::SimulatorBackend& simulator;
};

/// Units of work; each one is persisted before the next starts.
enum class Step { input_frames, real_features, script, simulation, sim_frames, sim_features, similarity, finished };
std::string_view to_string(Step s);

/// Called after a step's artifacts and the manifest are on disk.
/// `iteration` is 0 for the per-run steps.
using Observer = std::function<void(const RunState&, Step, int iteration)>;

/// Text sent back to the script role after a validation failure.
std::string validation_feedback(const std::vector<scenic::Diagnostic>& diags);

/// The run seed: FNV-1a of the run id folded to 31 bits, so that
/// simulators with 32-bit seed APIs accept it unchanged.
std::uint64_t seed_for(std::string_view run_id);

/// Probes `video` (throwing frames::FrameError before anything is created),
/// then creates `run_dir` (which must not exist or be empty) and drives the
/// loop to an outcome. The run id is the directory name.
RunState run_pipeline(const std::filesystem::path& video, const std::filesystem::path& run_dir,
                      const EngineConfig& cfg, Backends backends, const Observer& observer = {});

/// Continues a run from its first incomplete step. Finished runs come back
/// unchanged; a gateway_failed run retries the step that failed. Throws
/// RunLoadError for unreadable manifests.
RunState resume(const std::filesystem::path& run_dir, const EngineConfig& cfg, Backends backends,
                const Observer& observer = {});

}  // namespace vid2scenic::pipeline
