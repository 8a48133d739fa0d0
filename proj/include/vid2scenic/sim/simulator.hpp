#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "vid2scenic/frames/frame_pack.hpp"
#include "vid2scenic/scenic/script.hpp"

namespace vid2scenic::sim {

enum class SimStatus { ok, scenario_error, runtime_error, timeout };
std::string_view to_string(SimStatus s);
/// Throws std::invalid_argument for anything but the four status names.
SimStatus sim_status_from_string(std::string_view s);

struct SimRequest {
    scenic::ScenicScript script;
    std::uint64_t seed = 0;
    double max_sim_seconds = 20.0;
    /// Directory the backend owns for this simulation.
    std::filesystem::path record;
};

struct SimResult {
    SimStatus status = SimStatus::runtime_error;
    std::optional<frames::VideoRef> video;  // set iff ok
    /// Digest naming the produced video; empty unless ok.
    std::string identity;
    std::string log_excerpt;
    double wall_time_s = 0.0;
};

/// Same field names as the shim's result manifest, plus `identity`.
nlohmann::json to_json(const SimResult& r);
SimResult sim_result_from_json(const nlohmann::json& j);

class SimulatorBackend {
public:
    virtual ~SimulatorBackend() = default;
    virtual SimResult run(const SimRequest& req) = 0;
};

/// Creates `req.record`, runs the backend and enforces the result contract:
/// ok comes with an existing video, anything else with a non-empty log.
SimResult run_simulation(const SimRequest& req, SimulatorBackend& backend);

/// Deterministic in-process simulator. Next to the same `script.scenic` and
/// `request.json` the external backend leaves, writes `video.mockvid` (a JSON token
/// video carrying the rendered script) and `result.json` into the record
/// directory; the identity is SHA-256 over (rendered tree, seed). Scripts
/// importing a model outside `models` fail with scenario_error, the way a
/// real runtime rejects a simulator it does not have.
class MockSimBackend : public SimulatorBackend {
public:
    static constexpr double kFps = 20.0;
    MockSimBackend();
    explicit MockSimBackend(std::set<std::string> models) : models_(std::move(models)) {}

    SimResult run(const SimRequest& req) override;

private:
    std::set<std::string> models_;
};

struct ExternalSimConfig {
    /// Shim command; `--request <request.json>` is appended.
    std::string command;
    std::chrono::milliseconds wall_timeout{120000};
};

/// Talks to the out-of-process shim. Writes `script.scenic` and
/// `request.json` into the record directory, which is also the shim's
/// output_dir, runs the shim under a wall-clock timeout in its own process
/// group and reads `result.json` only after the shim has exited.
class ExternalSimBackend : public SimulatorBackend {
public:
    explicit ExternalSimBackend(ExternalSimConfig cfg) : cfg_(std::move(cfg)) {}

    SimResult run(const SimRequest& req) override;

private:
    ExternalSimConfig cfg_;
};

}  // namespace vid2scenic::sim
