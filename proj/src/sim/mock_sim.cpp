#include <chrono>
#include <cmath>

#include <fmt/format.h>

#include "vid2scenic/scenic/printer.hpp"
#include "vid2scenic/sim/simulator.hpp"
#include "vid2scenic/util/digest.hpp"
#include "vid2scenic/util/fs.hpp"

using nlohmann::json;

namespace vid2scenic::sim {

MockSimBackend::MockSimBackend()
    : models_{"scenic.simulators.carla.model", "scenic.simulators.newtonian.driving_model"} {}

SimResult MockSimBackend::run(const SimRequest& req) {
    const auto t0 = std::chrono::steady_clock::now();
    // same record layout as the external backend
    const auto script_path = req.record / "script.scenic";
    util::write_file_atomic(script_path, req.script.source());
    json request{{"script_path", script_path.string()},
                 {"seed", req.seed},
                 {"max_sim_seconds", req.max_sim_seconds},
                 {"output_dir", req.record.string()}};
    util::write_file_atomic(req.record / "request.json", request.dump(2) + "\n");
    SimResult r;
    const auto& model = req.script.tree().model_import;
    if (model && !models_.count(*model)) {
        r.status = SimStatus::scenario_error;
        r.log_excerpt = fmt::format("cannot load world model '{}': not available in this simulator", *model);
    } else {
        const std::string text = scenic::render(req.script.tree());
        const int frames = std::max(1, static_cast<int>(std::lround(req.max_sim_seconds * kFps)));
        r.identity = util::sha256_hex(fmt::format("{}\n#seed={}", text, req.seed));
        json video{{"kind", "sim-video"},
                   {"script", text},
                   {"seed", req.seed},
                   {"identity", r.identity},
                   {"frames", frames},
                   {"fps", kFps}};
        auto path = req.record / "video.mockvid";
        util::write_file_atomic(path, video.dump(2) + "\n");
        r.status = SimStatus::ok;
        r.video = frames::VideoRef{path, frames, kFps, frames / kFps};
        r.log_excerpt = fmt::format("mock simulation of {} frames at {} fps", frames, kFps);
    }
    r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    util::write_file_atomic(req.record / "result.json", to_json(r).dump(2) + "\n");
    return r;
}

}  // namespace vid2scenic::sim
