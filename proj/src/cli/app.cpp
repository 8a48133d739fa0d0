#include "vid2scenic/cli/app.hpp"

#include <glob.h>

#include <algorithm>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "vid2scenic/cli/config.hpp"
#include "vid2scenic/gateway/mock_backend.hpp"
#include "vid2scenic/pipeline/batch.hpp"
#include "vid2scenic/pipeline/report.hpp"
#include "vid2scenic/scenic/hints.hpp"
#include "vid2scenic/scenic/validator.hpp"
#include "vid2scenic/util/fs.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vid2scenic::cli {

namespace {

/// A command failure carrying its exit code.
struct Failure {
    int code;
    std::string message;
};

class Command {
public:
    Command(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}
    bool json_mode = false;

    int fail(const Failure& f) {
        if (json_mode) {
            err_ << json{{"error", f.message}, {"exit_code", f.code}}.dump() << "\n";
        } else {
            err_ << "error: " << f.message << "\n";
        }
        return f.code;
    }
    std::ostream& out() { return out_; }
    std::ostream& err() { return err_; }

private:
    std::ostream& out_;
    std::ostream& err_;
};

PipelineConfig config_or_fail(const fs::path& path) {
    try {
        return load_config(path);
    } catch (const ConfigError& e) {
        throw Failure{kExitUsage, e.what()};
    }
}

std::unique_ptr<Stack> stack_or_fail(const PipelineConfig& cfg) {
    try {
        return make_stack(cfg);
    } catch (const ConfigError& e) {
        throw Failure{kExitUsage, e.what()};
    } catch (const gateway::CredentialError& e) {
        throw Failure{kExitUsage, e.what()};
    }
}

std::string read_or_fail(const fs::path& p) {
    try {
        return util::read_file(p);
    } catch (const util::IoError& e) {
        throw Failure{kExitIo, e.what()};
    }
}

// The config a run was started with, unless one is given.
fs::path config_of_run(const fs::path& run_dir, const std::string& given) {
    if (!given.empty()) return given;
    try {
        auto s = pipeline::load_run(run_dir);
        return s.config.at("source").get<std::string>();
    } catch (const pipeline::RunLoadError& e) {
        throw Failure{kExitIo, e.what()};
    } catch (const std::exception&) {
        throw Failure{kExitUsage, "run manifest records no config file; pass --config"};
    }
}

json run_summary(const pipeline::RunState& s, const fs::path& dir) {
    json error = nullptr;
    if (s.error) error = {{"stage", s.error->stage}, {"message", s.error->message}};
    return {{"run_dir", dir.string()},
            {"run_id", s.run_id},
            {"outcome", s.outcome ? json(pipeline::to_string(*s.outcome)) : json(nullptr)},
            {"iterations", s.iterations.size()},
            {"wall_time_s", s.wall_time_s()},
            {"error", error}};
}

std::string human_summary(const json& r) {
    std::string outcome = r["outcome"].is_null() ? "unfinished" : r["outcome"].get<std::string>();
    std::size_t n = r["iterations"].get<std::size_t>();
    std::string text = fmt::format("{} after {} iteration{}: {}\n", outcome, n, n == 1 ? "" : "s",
                                   r["run_dir"].get<std::string>());
    if (!r["error"].is_null()) {
        std::string msg = r["error"]["message"].get<std::string>();
        if (auto nl = msg.find('\n'); nl != std::string::npos) msg = msg.substr(0, nl) + " ...";
        text += fmt::format("  {}: {}\n", r["error"]["stage"].get<std::string>(), msg);
    }
    return text;
}

int exit_for(const std::optional<pipeline::Outcome>& o) {
    return o == pipeline::Outcome::accepted ? kExitOk : kExitPipeline;
}

pipeline::Observer progress(Command& cmd, std::mutex& mu) {
    if (cmd.json_mode) return {};
    return [&cmd, &mu](const pipeline::RunState& s, pipeline::Step step, int iteration) {
        std::lock_guard lock(mu);
        if (iteration > 0)
            cmd.err() << fmt::format("[{}] iter {} {}\n", s.run_id, iteration, pipeline::to_string(step));
        else
            cmd.err() << fmt::format("[{}] {}\n", s.run_id, pipeline::to_string(step));
    };
}

// ---- convert / resume ---------------------------------------------------

struct ConvertArgs {
    std::vector<std::string> videos;
    std::string config;
    std::string out;
    std::string runs_dir;
};

int convert(Command& cmd, const ConvertArgs& a) {
    if (!a.out.empty() && a.videos.size() > 1) throw Failure{kExitUsage, "--out takes a single video; use --runs-dir"};
    PipelineConfig cfg = config_or_fail(a.config);
    for (const auto& v : a.videos) {
        if (!fs::is_regular_file(v)) throw Failure{kExitIo, "no such video: " + v};
    }
    auto stack = stack_or_fail(cfg);
    const fs::path runs = a.runs_dir.empty() ? cfg.paths.runs_dir : fs::path(a.runs_dir);

    std::vector<pipeline::BatchJob> jobs;
    try {
        for (const auto& v : a.videos) {
            jobs.push_back({v, a.out.empty() ? pipeline::reserve_run_dir(runs, v) : fs::path(a.out)});
        }
    } catch (const fs::filesystem_error& e) {
        throw Failure{kExitIo, e.what()};
    }
    std::mutex mu;
    auto items = pipeline::run_batch(jobs, stack->engine, stack->backends(), cfg.loop.batch_parallelism,
                                     progress(cmd, mu));

    json runs_json = json::array();
    int code = kExitOk;
    for (const auto& item : items) {
        if (!item.state) {
            // never started: drop the directory we reserved for it
            std::error_code ec;
            if (a.out.empty() && fs::is_empty(item.job.run_dir, ec)) fs::remove(item.job.run_dir, ec);
            runs_json.push_back({{"video", item.job.video.string()}, {"error", item.error}});
            code = std::max(code, kExitIo);
            continue;
        }
        json r = run_summary(*item.state, item.job.run_dir);
        r["video"] = item.job.video.string();
        runs_json.push_back(r);
        if (code != kExitIo) code = std::max(code, exit_for(item.state->outcome));
    }
    if (cmd.json_mode) {
        cmd.out() << (runs_json.size() == 1 ? runs_json[0] : json{{"runs", runs_json}}).dump() << "\n";
    } else {
        for (const auto& r : runs_json) {
            if (r.contains("outcome"))
                cmd.out() << human_summary(r);
            else
                cmd.err() << "error: " << r["video"].get<std::string>() << ": " << r["error"].get<std::string>() << "\n";
        }
    }
    return code;
}

int resume_cmd(Command& cmd, const std::string& run_dir, const std::string& config) {
    PipelineConfig cfg = config_or_fail(config_of_run(run_dir, config));
    auto stack = stack_or_fail(cfg);
    std::mutex mu;
    pipeline::RunState s;
    try {
        s = pipeline::resume(run_dir, stack->engine, stack->backends(), progress(cmd, mu));
    } catch (const pipeline::RunLoadError& e) {
        throw Failure{kExitIo, e.what()};
    }
    json r = run_summary(s, run_dir);
    if (cmd.json_mode)
        cmd.out() << r.dump() << "\n";
    else
        cmd.out() << human_summary(r);
    return exit_for(s.outcome);
}

// ---- validate / hints ---------------------------------------------------

scenic::Catalog catalog_for(const std::string& catalog, const std::string& config) {
    fs::path path = catalog;
    if (path.empty()) {
        if (config.empty()) throw Failure{kExitUsage, "validate needs --catalog or --config"};
        path = config_or_fail(config).paths.catalog;
    }
    try {
        return scenic::load_catalog(path);
    } catch (const std::exception& e) {
        throw Failure{kExitUsage, fmt::format("catalog {}: {}", path.string(), e.what())};
    }
}

int validate_cmd(Command& cmd, const std::string& file, const std::string& catalog, const std::string& config) {
    scenic::Catalog cat = catalog_for(catalog, config);
    const std::string text = read_or_fail(file);
    auto parsed = scenic::parse(text);
    std::vector<scenic::Diagnostic> diags = parsed ? scenic::validate(parsed.value(), cat) : parsed.diagnostics();
    if (cmd.json_mode) {
        cmd.out() << scenic::to_json_lines(diags);
    } else {
        for (const auto& d : diags) cmd.out() << scenic::format_text(d, file) << "\n";
        if (!scenic::has_errors(diags)) cmd.out() << file << ": ok\n";
    }
    return scenic::has_errors(diags) ? kExitGate : kExitOk;
}

int hints_cmd(Command& cmd, const std::string& file) {
    const std::string text = read_or_fail(file);
    auto parsed = scenic::parse(text);
    if (!parsed) {
        for (const auto& d : parsed.diagnostics()) cmd.err() << scenic::format_text(d, file) << "\n";
        return kExitGate;
    }
    auto hints = scenic::static_feature_hints(parsed.value());
    json j{{"hints", std::vector<std::string>(hints.begin(), hints.end())},
           {"vector", json::parse(gateway::feature_payload_text(gateway::hint_vector(hints)))}};
    if (cmd.json_mode) {
        cmd.out() << j.dump() << "\n";
    } else {
        for (const auto& h : j["hints"]) cmd.out() << h.get<std::string>() << "\n";
    }
    return kExitOk;
}

// ---- similarity ---------------------------------------------------------

features::FeatureVector features_file(const std::string& path) {
    const std::string text = read_or_fail(path);
    try {
        json j = json::parse(text);
        if (j.is_array()) return features::FeatureVector::from_span(j.get<std::vector<double>>());
        return features::feature_vector_from_json(j);
    } catch (const std::exception& e) {
        throw Failure{kExitUsage, fmt::format("{}: not a feature vector ({})", path, e.what())};
    }
}

int similarity_cmd(Command& cmd, const std::string& a, const std::string& b, const std::string& config) {
    features::ThresholdConfig thresholds;
    if (!config.empty()) thresholds = features::ThresholdConfig(config_or_fail(config).thresholds);
    auto real = features_file(a);
    auto sim = features_file(b);
    features::SimilarityReport report;
    try {
        report = features::similarity(real, sim, thresholds);
    } catch (const features::ContractViolation& e) {
        throw Failure{kExitUsage, e.what()};
    }
    json j = features::to_json(report);
    if (cmd.json_mode) {
        cmd.out() << j.dump() << "\n";
    } else {
        cmd.out() << j.dump(2) << "\n";
        if (!report.passed) cmd.out() << features::synthesize_feedback(report.violations) << "\n";
    }
    return report.passed ? kExitOk : kExitGate;
}

// ---- report -------------------------------------------------------------

std::vector<fs::path> expand_runs(const std::vector<std::string>& patterns) {
    std::vector<fs::path> dirs;
    for (const auto& pat : patterns) {
        glob_t g{};
        std::vector<std::string> matches;
        if (::glob(pat.c_str(), GLOB_NOCHECK | GLOB_TILDE, nullptr, &g) == 0) {
            for (std::size_t i = 0; i < g.gl_pathc; ++i) matches.emplace_back(g.gl_pathv[i]);
        }
        ::globfree(&g);
        for (const fs::path m : matches) {
            if (fs::is_directory(m) && !fs::exists(m / "run.json")) {
                // a runs directory: take its children
                std::vector<fs::path> kids;
                for (const auto& e : fs::directory_iterator(m)) {
                    if (e.is_directory()) kids.push_back(e.path());
                }
                std::sort(kids.begin(), kids.end());
                if (kids.empty()) dirs.push_back(m);
                dirs.insert(dirs.end(), kids.begin(), kids.end());
            } else {
                dirs.push_back(m);
            }
        }
    }
    return dirs;
}

int report_cmd(Command& cmd, const std::vector<std::string>& patterns) {
    pipeline::AggregateReport r;
    try {
        r = pipeline::build_report(expand_runs(patterns));
    } catch (const pipeline::ReportError& e) {
        throw Failure{kExitIo, e.what()};
    }
    if (cmd.json_mode)
        cmd.out() << pipeline::to_json(r).dump() << "\n";
    else
        cmd.out() << pipeline::format_table(r);
    return kExitOk;
}

// ---- variations ---------------------------------------------------------

int variations_cmd(Command& cmd, const std::string& run_dir, int count, const std::string& config) {
    if (count < 1) throw Failure{kExitUsage, "--count must be at least 1"};
    pipeline::RunState s;
    try {
        s = pipeline::load_run(run_dir);
    } catch (const pipeline::RunLoadError& e) {
        throw Failure{kExitIo, e.what()};
    }
    if (s.outcome != pipeline::Outcome::accepted || s.iterations.empty()) {
        throw Failure{kExitPipeline, fmt::format("run {} was not accepted ({})", run_dir,
                                                 s.outcome ? pipeline::to_string(*s.outcome) : "unfinished")};
    }
    PipelineConfig cfg = config_or_fail(config_of_run(run_dir, config));
    auto simulator = make_simulator(cfg);
    auto parsed = scenic::parse(s.iterations.back().script);
    if (!parsed) throw Failure{kExitPipeline, "accepted script no longer parses"};

    std::set<std::uint64_t> seeds;
    json items = json::array();
    bool all_ok = true;
    for (int i = 1; static_cast<int>(seeds.size()) < count; ++i) {
        std::uint64_t seed = pipeline::seed_for(fmt::format("{}/variation-{}", s.run_id, i));
        if (!seeds.insert(seed).second) continue;
        fs::path record = fs::path(run_dir) / "variations" / fmt::format("seed_{}", seed);
        sim::SimRequest req{parsed.value(), seed, cfg.simulator.max_sim_seconds, record};
        sim::SimResult r = sim::run_simulation(req, *simulator);
        all_ok = all_ok && r.status == sim::SimStatus::ok;
        json item = sim::to_json(r);
        item["seed"] = seed;
        item["result"] = (record / "result.json").string();
        // the engine's own record; the shim's manifest is not trusted blindly
        util::write_file_atomic(record / "result.json", sim::to_json(r).dump(2) + "\n");
        items.push_back(item);
    }
    json j{{"run_dir", run_dir}, {"run_id", s.run_id}, {"variations", items}};
    util::write_file_atomic(fs::path(run_dir) / "variations" / "variations.json", j.dump(2) + "\n");
    if (cmd.json_mode) {
        cmd.out() << j.dump() << "\n";
    } else {
        for (const auto& it : items) {
            cmd.out() << fmt::format("seed {:>10}  {:<14}  {}\n", it["seed"].get<std::uint64_t>(),
                                     it["status"].get<std::string>(),
                                     it["identity"].get<std::string>().empty() ? it["log_excerpt"].get<std::string>()
                                                                               : it["identity"].get<std::string>());
        }
    }
    return all_ok ? kExitOk : kExitPipeline;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dashcam video to SCENIC scenario pipeline", "vid2scenic"};
    app.require_subcommand(1);
    Command cmd(out, err);

    ConvertArgs conv;
    auto* c_convert = app.add_subcommand("convert", "Turn dashcam videos into accepted scenario scripts");
    c_convert->add_option("videos", conv.videos, "Input videos (several run as a batch)")->required();
    c_convert->add_option("--config", conv.config, "Pipeline config (TOML)")->required();
    c_convert->add_option("--out", conv.out, "Run directory (single video only)");
    c_convert->add_option("--runs-dir", conv.runs_dir, "Parent directory for new runs");
    c_convert->add_flag("--json", cmd.json_mode, "Machine-readable output");

    std::string run_dir, config;
    auto* c_resume = app.add_subcommand("resume", "Continue an interrupted run");
    c_resume->add_option("run_dir", run_dir)->required();
    c_resume->add_option("--config", config, "Config (default: the one the run was started with)");
    c_resume->add_flag("--json", cmd.json_mode);

    std::string script, catalog;
    auto* c_validate = app.add_subcommand("validate", "Check a script against the simulator catalog");
    c_validate->add_option("script", script)->required();
    c_validate->add_option("--catalog", catalog, "Catalog JSON");
    c_validate->add_option("--config", config, "Take the catalog from this config");
    c_validate->add_flag("--json", cmd.json_mode, "One JSON diagnostic per line");

    std::string fa, fb;
    auto* c_sim = app.add_subcommand("similarity", "Compare two feature files (real, simulated)");
    c_sim->add_option("real", fa)->required();
    c_sim->add_option("sim", fb)->required();
    c_sim->add_option("--config", config, "Take thresholds from this config");
    c_sim->add_flag("--json", cmd.json_mode);

    std::vector<std::string> patterns;
    auto* c_report = app.add_subcommand("report", "Aggregate finished runs");
    c_report->add_option("runs", patterns, "Run directories, runs directories or globs")->required();
    c_report->add_flag("--json", cmd.json_mode);

    int count = 0;
    auto* c_var = app.add_subcommand("variations", "Simulate an accepted script under more seeds");
    c_var->add_option("run_dir", run_dir)->required();
    c_var->add_option("--count", count, "Number of seeds")->required();
    c_var->add_option("--config", config, "Config (default: the one the run was started with)");
    c_var->add_flag("--json", cmd.json_mode);

    auto* c_hints = app.add_subcommand("hints", "Show the feature labels a script evidences");
    c_hints->add_option("script", script)->required();
    c_hints->add_flag("--json", cmd.json_mode);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front())
            err << sub->help();
        else
            err << app.help();
        return kExitUsage;
    }

    try {
        if (c_convert->parsed()) return convert(cmd, conv);
        if (c_resume->parsed()) return resume_cmd(cmd, run_dir, config);
        if (c_validate->parsed()) return validate_cmd(cmd, script, catalog, config);
        if (c_sim->parsed()) return similarity_cmd(cmd, fa, fb, config);
        if (c_report->parsed()) return report_cmd(cmd, patterns);
        if (c_var->parsed()) return variations_cmd(cmd, run_dir, count, config);
        if (c_hints->parsed()) return hints_cmd(cmd, script);
    } catch (const Failure& f) {
        return cmd.fail(f);
    } catch (const frames::FrameError& e) {
        return cmd.fail({kExitIo, e.what()});
    } catch (const util::IoError& e) {
        return cmd.fail({kExitIo, e.what()});
    } catch (const fs::filesystem_error& e) {
        return cmd.fail({kExitIo, e.what()});
    } catch (const std::exception& e) {
        return cmd.fail({kExitPipeline, e.what()});
    }
    return kExitUsage;
}

}  // namespace vid2scenic::cli
