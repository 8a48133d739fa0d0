#include "vid2scenic/sim/simulator.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace vid2scenic::sim {

std::string_view to_string(SimStatus s) {
    switch (s) {
        case SimStatus::ok: return "ok";
        case SimStatus::scenario_error: return "scenario_error";
        case SimStatus::runtime_error: return "runtime_error";
        case SimStatus::timeout: return "timeout";
    }
    return "runtime_error";
}

SimStatus sim_status_from_string(std::string_view s) {
    for (SimStatus st : {SimStatus::ok, SimStatus::scenario_error, SimStatus::runtime_error, SimStatus::timeout}) {
        if (to_string(st) == s) return st;
    }
    throw std::invalid_argument(fmt::format("unknown simulation status '{}'", s));
}

json to_json(const SimResult& r) {
    json j{{"status", to_string(r.status)},
           {"video_path", nullptr},
           {"frames", nullptr},
           {"fps", nullptr},
           {"identity", r.identity},
           {"log_excerpt", r.log_excerpt},
           {"wall_time_s", r.wall_time_s}};
    if (r.video) {
        j["video_path"] = r.video->path.string();
        j["frames"] = r.video->frame_count;
        j["fps"] = r.video->fps;
    }
    return j;
}

SimResult sim_result_from_json(const json& j) {
    SimResult r;
    r.status = sim_status_from_string(j.at("status").get<std::string>());
    if (j.contains("video_path") && !j["video_path"].is_null()) {
        frames::VideoRef v;
        v.path = j["video_path"].get<std::string>();
        v.frame_count = j.value("frames", 0);
        v.fps = j.value("fps", 0.0);
        if (v.fps > 0) v.duration_s = v.frame_count / v.fps;
        r.video = v;
    }
    r.identity = j.value("identity", "");
    r.log_excerpt = j.value("log_excerpt", "");
    r.wall_time_s = j.value("wall_time_s", 0.0);
    return r;
}

SimResult run_simulation(const SimRequest& req, SimulatorBackend& backend) {
    fs::create_directories(req.record);
    SimResult r = backend.run(req);
    if (r.status == SimStatus::ok) {
        if (!r.video || !fs::exists(r.video->path)) {
            r.status = SimStatus::runtime_error;
            r.log_excerpt = "simulator reported ok but produced no video";
            r.video.reset();
            r.identity.clear();
        }
    } else {
        r.video.reset();
        r.identity.clear();
        if (r.log_excerpt.empty()) r.log_excerpt = fmt::format("simulation ended with {}", to_string(r.status));
    }
    return r;
}

}  // namespace vid2scenic::sim
