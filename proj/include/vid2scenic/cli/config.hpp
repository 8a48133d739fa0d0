#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "vid2scenic/frames/frame_pack.hpp"
#include "vid2scenic/gateway/http_backend.hpp"
#include "vid2scenic/gateway/prompt.hpp"
#include "vid2scenic/pipeline/engine.hpp"
#include "vid2scenic/sim/simulator.hpp"

namespace vid2scenic::cli {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GatewaySection {
    std::string backend = "http";  // http | mock
    std::string mock_mode = "faithful";
    gateway::HttpConfig http;
};

struct LoopSection {
    int max_iterations = 5;
    int repair_attempts = 1;
    int batch_parallelism = 2;
    bool stop_on_stall = false;
};

struct SimulatorSection {
    std::string backend = "mock";  // mock | external
    std::string shim_command;
    double max_sim_seconds = 20.0;
    double timeout_s = 120.0;  // wall clock per shim invocation
};

struct PathsSection {
    std::filesystem::path fixtures_dir;
    std::filesystem::path catalog;
    std::filesystem::path runs_dir;
};

struct PipelineConfig {
    GatewaySection gateway;
    frames::FrameConfig frames;
    std::map<std::string, double> thresholds;
    LoopSection loop;
    SimulatorSection simulator;
    PathsSection paths;

    std::filesystem::path source;  // the file it came from
    std::string text;              // its bytes, verbatim
    std::map<std::string, std::string> env_overrides;
};

/// Environment variables named VID2SCENIC_<SECTION>__<KEY> override the
/// file, e.g. VID2SCENIC_LOOP__MAX_ITERATIONS=3.
inline constexpr std::string_view kEnvPrefix = "VID2SCENIC_";

/// Reads a TOML document with sections gateway, frames, thresholds, loop,
/// simulator and paths. Unknown sections or keys, wrong types, out-of-range
/// values and missing paths raise ConfigError naming the key. Relative
/// paths resolve against the config file's directory. `env` defaults to
/// the process environment.
PipelineConfig load_config(const std::filesystem::path& file);
PipelineConfig load_config(const std::filesystem::path& file, const std::map<std::string, std::string>& env);

/// `{"source", "text", "env_overrides", "resolved"}`, as stored in run.json.
nlohmann::json snapshot(const PipelineConfig& cfg);

/// Everything a pipeline run needs, built from a config.
struct Stack {
    gateway::FewShotRegistry registry;
    std::unique_ptr<gateway::CompletionBackend> completion;
    std::unique_ptr<gateway::Gateway> gateway;
    std::unique_ptr<sim::SimulatorBackend> simulator;
    pipeline::EngineConfig engine;

    pipeline::Backends backends() { return {*gateway, *simulator}; }
};

/// Throws ConfigError for unusable fixtures or catalog and
/// gateway::CredentialError when the live backend has no credential.
std::unique_ptr<Stack> make_stack(const PipelineConfig& cfg);

/// Simulator backend alone (variations needs no model).
std::unique_ptr<sim::SimulatorBackend> make_simulator(const PipelineConfig& cfg);

}  // namespace vid2scenic::cli
