#include "vid2scenic/pipeline/engine.hpp"

#include <chrono>

#include <fmt/format.h>

#include "vid2scenic/scenic/script.hpp"
#include "vid2scenic/scenic/validator.hpp"
#include "vid2scenic/util/digest.hpp"
#include "vid2scenic/util/fs.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vid2scenic::pipeline {

std::string_view to_string(Step s) {
    switch (s) {
        case Step::input_frames: return "input_frames";
        case Step::real_features: return "real_features";
        case Step::script: return "script";
        case Step::simulation: return "simulation";
        case Step::sim_frames: return "sim_frames";
        case Step::sim_features: return "sim_features";
        case Step::similarity: return "similarity";
        case Step::finished: return "finished";
    }
    return "finished";
}

std::string validation_feedback(const std::vector<scenic::Diagnostic>& diags) {
    std::string msgs;
    for (const auto& d : diags) {
        if (!d.is_error()) continue;
        if (!msgs.empty()) msgs += "; ";
        msgs += fmt::format("line {}: [{}] {}", d.span.line, d.code, d.message);
    }
    return fmt::format("the script failed validation: {}; fix only these issues", msgs);
}

std::uint64_t seed_for(std::string_view run_id) { return util::fnv1a64(run_id) & 0x7fffffffULL; }

namespace {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

struct Checked {
    std::optional<scenic::ScenicScript> script;
    std::vector<scenic::Diagnostic> diags;
    bool ok() const { return script && !scenic::has_errors(diags); }
};

class Driver {
public:
    Driver(const fs::path& dir, RunState& s, const EngineConfig& cfg, Backends b, const Observer& obs)
        : dir_(dir), s_(s), cfg_(cfg), b_(b), obs_(obs) {}

    void drive() {
        if (s_.outcome) return;
        if (!prepare_input()) return;
        for (;;) {
            std::size_t n = s_.iterations.size();
            if (n == 0 || s_.iterations.back().feedback_out) {
                if (static_cast<int>(n) >= cfg_.max_iterations) {
                    // budget shrank between sessions
                    finish(Outcome::budget_exhausted, std::nullopt);
                    return;
                }
                if (!start_iteration(static_cast<int>(n) + 1)) return;
            }
            if (!continue_iteration()) return;
        }
    }

private:
    void commit(Step st, int iteration) {
        save_run(s_, dir_);
        if (obs_) obs_(s_, st, iteration);
    }

    void finish(Outcome o, std::optional<RunError> err) {
        s_.outcome = o;
        s_.error = std::move(err);
        s_.finished_at = utc_now();
        commit(Step::finished, static_cast<int>(s_.iterations.size()));
    }

    fs::path iter_dir(int i) const { return dir_ / iteration_dir_name(i); }

    Checked check(const std::string& text) const {
        Checked c;
        auto parsed = scenic::parse(text);
        if (!parsed) {
            c.diags = parsed.diagnostics();
            return c;
        }
        c.diags = scenic::validate(parsed.value(), cfg_.catalog);
        c.script = std::move(parsed).value();
        return c;
    }

    bool prepare_input() {
        const fs::path input = dir_ / "input";
        if (fs::exists(input / "manifest.json")) {
            input_pack_ = frames::load_frame_pack(input);
        } else {
            Stopwatch sw;
            input_pack_ = frames::build_frame_pack(s_.input_video.path, cfg_.frames);
            frames::write_frame_pack(input_pack_, input);
            s_.input_s += sw.seconds();
            commit(Step::input_frames, 0);
        }
        if (s_.real_features) return true;

        const fs::path file = dir_ / "real_features.json";
        Stopwatch sw;
        if (fs::exists(file)) {
            s_.real_features = features::feature_vector_from_json(json::parse(util::read_file(file)));
        } else {
            try {
                auto r = b_.gateway.extract_features(input_pack_);
                s_.real_features = r.vector;
            } catch (const gateway::GatewayError& e) {
                finish(Outcome::gateway_failed, RunError{"real_features", e.what()});
                return false;
            }
            util::write_file_atomic(file, features::to_json(*s_.real_features).dump(2) + "\n");
        }
        s_.input_s += sw.seconds();
        commit(Step::real_features, 0);
        return true;
    }

    // Generates (or adopts from disk) the script of iteration i and appends
    // its record. False when the run ended.
    bool start_iteration(int i) {
        const fs::path idir = iter_dir(i);
        fs::create_directories(idir);
        IterationRecord rec;
        rec.index = i;
        const fs::path script_file = idir / "script.scenic";

        Checked checked;
        if (fs::exists(script_file)) {
            rec.script = util::read_file(script_file);
            checked = check(rec.script);
            while (fs::exists(idir / fmt::format("attempt_{}.scenic", rec.repairs + 1))) ++rec.repairs;
        } else {
            Stopwatch sw;
            std::optional<std::string> feedback, prior;
            if (i > 1) {
                prior = s_.iterations[i - 2].script;
                feedback = s_.iterations[i - 2].feedback_out;
            }
            std::string text;
            for (int k = 1;; ++k) {
                const fs::path attempt = idir / fmt::format("attempt_{}.scenic", k);
                if (fs::exists(attempt)) {
                    text = util::read_file(attempt);
                } else {
                    try {
                        auto r = k == 1 ? b_.gateway.generate_script(input_pack_, feedback, prior)
                                        : b_.gateway.generate_script(input_pack_, validation_feedback(checked.diags), text);
                        text = std::move(r.script);
                    } catch (const gateway::GatewayError& e) {
                        rec.timings.gateway_s += sw.seconds();
                        finish(Outcome::gateway_failed, RunError{"script", e.what()});
                        return false;
                    }
                }
                checked = check(text);
                if (checked.ok() || k > cfg_.repair_attempts) break;
                util::write_file_atomic(idir / fmt::format("attempt_{}.diagnostics.jsonl", k),
                                        scenic::to_json_lines(checked.diags));
                util::write_file_atomic(attempt, text);
                rec.repairs = k;
            }
            rec.script = std::move(text);
            rec.timings.gateway_s += sw.seconds();
            util::write_file_atomic(idir / "diagnostics.jsonl", scenic::to_json_lines(checked.diags));
            util::write_file_atomic(script_file, rec.script);  // last: its presence marks the step done
        }
        rec.line_count = scenic::count_nonblank_lines(rec.script);
        rec.validation = checked.diags;
        s_.iterations.push_back(std::move(rec));
        commit(Step::script, i);

        if (!checked.ok()) {
            finish(Outcome::validation_failed,
                   RunError{"validation", validation_feedback(s_.iterations.back().validation)});
            return false;
        }
        if (cfg_.stop_on_stall && i > 1) {
            auto prev = scenic::parse(s_.iterations[i - 2].script);
            if (prev && prev.value().tree() == checked.script->tree()) {
                finish(Outcome::budget_exhausted, RunError{"stall", "regenerated script is unchanged"});
                return false;
            }
        }
        return true;
    }

    // Runs whatever is still missing of the last iteration. True when
    // another iteration should follow.
    bool continue_iteration() {
        const std::size_t at = s_.iterations.size() - 1;
        const int i = s_.iterations[at].index;
        const fs::path idir = iter_dir(i);
        auto rec = [&]() -> IterationRecord& { return s_.iterations[at]; };

        if (!rec().sim) {
            Checked checked = check(rec().script);  // the manifest may predate a catalog change
            if (!checked.ok()) {
                rec().validation = checked.diags;
                finish(Outcome::validation_failed, RunError{"validation", validation_feedback(checked.diags)});
                return false;
            }
            Stopwatch sw;
            sim::SimRequest req{*checked.script, s_.seed, cfg_.max_sim_seconds, idir / "sim"};
            rec().sim = sim::run_simulation(req, b_.simulator);
            rec().timings.simulation_s += sw.seconds();
            commit(Step::simulation, i);
        }
        if (rec().sim->status != sim::SimStatus::ok) {
            finish(Outcome::simulation_failed,
                   RunError{"simulation", fmt::format("{}: {}", sim::to_string(rec().sim->status), rec().sim->log_excerpt)});
            return false;
        }

        if (!rec().sim_features) {
            const fs::path frames_dir = idir / "sim" / "frames";
            frames::FramePack pack;
            if (fs::exists(frames_dir / "manifest.json")) {
                pack = frames::load_frame_pack(frames_dir);
            } else {
                Stopwatch sw;
                try {
                    pack = frames::build_frame_pack(rec().sim->video->path, cfg_.frames);
                } catch (const frames::FrameError& e) {
                    rec().timings.extraction_s += sw.seconds();
                    finish(Outcome::simulation_failed, RunError{"sim_frames", e.what()});
                    return false;
                }
                frames::write_frame_pack(pack, frames_dir);
                rec().timings.extraction_s += sw.seconds();
                commit(Step::sim_frames, i);
            }
            const fs::path file = idir / "sim_features.json";
            Stopwatch sw;
            if (fs::exists(file)) {
                rec().sim_features = features::feature_vector_from_json(json::parse(util::read_file(file)));
            } else {
                try {
                    rec().sim_features = b_.gateway.extract_features(pack).vector;
                } catch (const gateway::GatewayError& e) {
                    rec().timings.extraction_s += sw.seconds();
                    finish(Outcome::gateway_failed, RunError{"sim_features", e.what()});
                    return false;
                }
                util::write_file_atomic(file, features::to_json(*rec().sim_features).dump(2) + "\n");
            }
            rec().timings.extraction_s += sw.seconds();
            commit(Step::sim_features, i);
        }

        if (!rec().report) {
            auto report = features::similarity(*s_.real_features, *rec().sim_features, cfg_.thresholds);
            util::write_file_atomic(idir / "similarity.json", features::to_json(report).dump(2) + "\n");
            if (!report.passed && i < cfg_.max_iterations) {
                std::string fb = features::synthesize_feedback(report.violations);
                util::write_file_atomic(idir / "feedback.txt", fb);
                rec().feedback_out = std::move(fb);
            }
            rec().report = std::move(report);
            commit(Step::similarity, i);
        }
        if (rec().report->passed) {
            finish(Outcome::accepted, std::nullopt);
            return false;
        }
        if (!rec().feedback_out) {
            finish(Outcome::budget_exhausted, std::nullopt);
            return false;
        }
        return true;
    }

    fs::path dir_;
    RunState& s_;
    const EngineConfig& cfg_;
    Backends b_;
    const Observer& obs_;
    frames::FramePack input_pack_;
};

void check_config(const EngineConfig& cfg) {
    if (cfg.max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
    if (cfg.repair_attempts < 0) throw std::invalid_argument("repair_attempts must not be negative");
    if (!(cfg.max_sim_seconds > 0)) throw std::invalid_argument("max_sim_seconds must be positive");
}

}  // namespace

RunState run_pipeline(const fs::path& video, const fs::path& run_dir, const EngineConfig& cfg, Backends backends,
                      const Observer& observer) {
    check_config(cfg);
    frames::VideoRef ref = frames::probe_video(video, cfg.frames);
    ref.path = fs::absolute(ref.path);
    if (fs::exists(run_dir) && !fs::is_empty(run_dir))
        throw util::IoError("run directory " + run_dir.string() + " already exists and is not empty");
    fs::create_directories(run_dir);

    RunState s;
    s.run_id = fs::absolute(run_dir).lexically_normal().filename().string();
    if (s.run_id.empty()) s.run_id = fs::absolute(run_dir).parent_path().filename().string();
    s.seed = seed_for(s.run_id);
    s.input_video = ref;
    s.config = cfg.snapshot;
    s.created_at = utc_now();
    save_run(s, run_dir);

    Driver(run_dir, s, cfg, backends, observer).drive();
    return s;
}

RunState resume(const fs::path& run_dir, const EngineConfig& cfg, Backends backends, const Observer& observer) {
    check_config(cfg);
    RunState s = load_run(run_dir);
    if (s.outcome == Outcome::gateway_failed) {
        // transient by nature: retry the step that failed
        s.outcome.reset();
        s.error.reset();
        s.finished_at.reset();
    }
    Driver(run_dir, s, cfg, backends, observer).drive();
    return s;
}

}  // namespace vid2scenic::pipeline
