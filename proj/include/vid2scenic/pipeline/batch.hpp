#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vid2scenic/pipeline/engine.hpp"

namespace vid2scenic::pipeline {

/// Creates and returns a fresh empty directory `<runs_dir>/<stem>-<UTC
/// time>`, with a numeric suffix when that name is taken.
std::filesystem::path reserve_run_dir(const std::filesystem::path& runs_dir, const std::filesystem::path& video);

struct BatchJob {
    std::filesystem::path video;
    std::filesystem::path run_dir;
};

struct BatchItem {
    BatchJob job;
    std::optional<RunState> state;
    std::string error;  // set when the run threw instead of reaching an outcome
};

/// Runs the jobs with at most `parallelism` in flight. Runs share nothing
/// but the config and backends, which must tolerate concurrent use; the
/// observer is called from worker threads. Results keep the job order.
std::vector<BatchItem> run_batch(const std::vector<BatchJob>& jobs, const EngineConfig& cfg, Backends backends,
                                 int parallelism, const Observer& observer = {});

}  // namespace vid2scenic::pipeline
