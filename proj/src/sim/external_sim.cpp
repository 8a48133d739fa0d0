#include <fmt/format.h>

#include "vid2scenic/sim/simulator.hpp"
#include "vid2scenic/util/digest.hpp"
#include "vid2scenic/util/fs.hpp"
#include "vid2scenic/util/process.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vid2scenic::sim {

namespace {

constexpr std::size_t kExcerptBytes = 4000;

std::string tail(const std::string& s) {
    if (s.size() <= kExcerptBytes) return s;
    auto cut = s.find('\n', s.size() - kExcerptBytes);
    return s.substr(cut == std::string::npos ? s.size() - kExcerptBytes : cut + 1);
}

std::string process_log(const util::ProcessResult& p) {
    std::string log = p.err;
    if (!p.out.empty()) log += (log.empty() ? "" : "\n") + p.out;
    return tail(log);
}

SimResult failure(SimStatus st, std::string log, double wall) {
    SimResult r;
    r.status = st;
    r.log_excerpt = std::move(log);
    r.wall_time_s = wall;
    return r;
}

// Schema check for the shim's manifest; throws with a reason.
SimResult read_manifest(const fs::path& path, const fs::path& output_dir) {
    json j = json::parse(util::read_file(path));
    if (!j.is_object()) throw std::runtime_error("result.json is not an object");
    // only status is mandatory; a failing shim may have nothing else to say
    if (!j.contains("status") || !j["status"].is_string()) throw std::runtime_error("result.json lacks 'status'");
    SimResult r;
    r.status = sim_status_from_string(j["status"].get<std::string>());
    if (j.contains("log_excerpt") && j["log_excerpt"].is_string()) r.log_excerpt = j["log_excerpt"].get<std::string>();
    if (r.status == SimStatus::ok) {
        if (!j.contains("video_path") || !j.contains("frames") || !j.contains("fps") || !j["video_path"].is_string() ||
            !j["frames"].is_number_integer() || !j["fps"].is_number())
            throw std::runtime_error("result.json: ok status needs video_path, frames and fps");
        fs::path video = j["video_path"].get<std::string>();
        if (video.is_relative()) video = output_dir / video;
        frames::VideoRef v{video, j["frames"].get<int>(), j["fps"].get<double>(), 0.0};
        if (v.fps > 0) v.duration_s = v.frame_count / v.fps;
        r.video = v;
    }
    return r;
}

}  // namespace

SimResult ExternalSimBackend::run(const SimRequest& req) {
    const fs::path dir = fs::absolute(req.record);
    fs::create_directories(dir);
    const fs::path manifest = dir / "result.json";
    fs::remove(manifest);  // never mistake a stale manifest for this run's

    const fs::path script = dir / "script.scenic";
    util::write_file_atomic(script, req.script.source());
    json request{{"script_path", script.string()},
                 {"seed", req.seed},
                 {"max_sim_seconds", req.max_sim_seconds},
                 {"output_dir", dir.string()}};
    const fs::path request_path = dir / "request.json";
    util::write_file_atomic(request_path, request.dump(2) + "\n");

    auto argv = util::split_command(cfg_.command);
    if (argv.empty()) return failure(SimStatus::runtime_error, "no simulator shim command configured", 0.0);
    argv.push_back("--request");
    argv.push_back(request_path.string());

    util::ProcessOptions opts;
    opts.timeout = cfg_.wall_timeout;
    opts.cwd = dir;
    util::ProcessResult p = util::run_process(argv, opts);

    if (p.spawn_failed || (p.term_signal == 0 && p.exit_code == 127 && p.err.rfind("exec failed:", 0) == 0))
        return failure(SimStatus::runtime_error, "could not start simulator shim: " + process_log(p), p.wall_s);
    if (p.timed_out) {
        return failure(SimStatus::timeout,
                       tail(fmt::format("shim exceeded the {} ms wall-clock limit and was killed\n{}",
                                        cfg_.wall_timeout.count(), process_log(p))),
                       p.wall_s);
    }
    if (p.term_signal != 0)
        return failure(SimStatus::runtime_error, fmt::format("shim killed by signal {}\n{}", p.term_signal, process_log(p)),
                       p.wall_s);

    SimResult r;
    try {
        r = read_manifest(manifest, dir);
    } catch (const std::exception& e) {
        return failure(SimStatus::runtime_error,
                       tail(fmt::format("unusable result manifest ({}), shim exit {}\n{}", e.what(), p.exit_code,
                                        process_log(p))),
                       p.wall_s);
    }
    if ((p.exit_code == 0) != (r.status == SimStatus::ok)) {
        return failure(SimStatus::runtime_error,
                       tail(fmt::format("shim exit code {} disagrees with status '{}'\n{}", p.exit_code,
                                        to_string(r.status), r.log_excerpt)),
                       p.wall_s);
    }
    r.wall_time_s = p.wall_s;
    if (r.status == SimStatus::ok) {
        if (!fs::exists(r.video->path))
            return failure(SimStatus::runtime_error, "shim reported video " + r.video->path.string() + " which does not exist",
                           p.wall_s);
        r.identity = util::sha256_hex(util::read_file(r.video->path));
    } else if (r.log_excerpt.empty()) {
        r.log_excerpt = process_log(p);
    }
    return r;
}

}  // namespace vid2scenic::sim
