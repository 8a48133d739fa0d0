#include <gtest/gtest.h>

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <mutex>
#include <numeric>
#include <random>
#include <set>

#include <fmt/format.h>

#include "mock_stack.hpp"
#include "vid2scenic/pipeline/batch.hpp"
#include "vid2scenic/pipeline/report.hpp"

using namespace vid2scenic;
using namespace vid2scenic::pipeline;
using namespace v2s_test;
using gateway::MockMode;
using gateway::Role;

namespace {

json doc_of(const fs::path& video) { return json::parse(util::read_file(video)); }

features::FeatureVector with(features::FeatureVector v, std::string_view id, double value) {
    auto vals = v.values();
    vals[*features::default_taxonomy().index_of(id)] = value;
    return features::FeatureVector(vals);
}

std::set<std::string> files_under(const fs::path& dir) {
    std::set<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        auto name = e.path().filename().string();
        if (name.rfind(".", 0) == 0) continue;  // in-flight temporaries
        out.insert(fs::relative(e.path(), dir).string());
    }
    return out;
}

}  // namespace

TEST(Pipeline, MatchingFirstScriptAcceptsImmediately) {
    TempDir t;
    MockStack m;
    auto video = write_video(t.path, "in", {{"fixture", "ped_crossing"}});
    auto s = run_pipeline(video, t.path / "run", m.cfg, m.backends());
    ASSERT_EQ(s.outcome, Outcome::accepted);
    ASSERT_EQ(s.iterations.size(), 1u);
    EXPECT_FALSE(s.iterations[0].feedback_out);
    EXPECT_EQ(s.iterations[0].script, fixture_script("ped_crossing"));
    EXPECT_EQ(m.completion.calls(Role::feature, doc_of(video)), 1);

    const fs::path run = t.path / "run";
    for (const char* f : {"run.json", "input/manifest.json", "input/frame_0.tok", "real_features.json",
                          "iter_01/script.scenic", "iter_01/diagnostics.jsonl", "iter_01/sim/result.json",
                          "iter_01/sim/request.json", "iter_01/sim/video.mockvid", "iter_01/sim/frames/manifest.json",
                          "iter_01/sim_features.json", "iter_01/similarity.json"}) {
        EXPECT_TRUE(fs::exists(run / f)) << f;
    }
    EXPECT_FALSE(fs::exists(run / "iter_01/feedback.txt"));
    EXPECT_EQ(s.seed, seed_for("run"));
    EXPECT_EQ(load_run(run).outcome, Outcome::accepted);
}

TEST(Pipeline, MissingLeadingStopAcceptedAtIterationTwo) {
    TempDir t;
    MockStack m;
    auto real = with(fixture_vector("ped_crossing"), "leading_vehicle_stopped", 1.0);
    auto video = write_video(t.path, "in", {{"fixture", "ped_crossing"}, {"features", values_json(real)}});
    auto s = run_pipeline(video, t.path / "run", m.cfg, m.backends());
    ASSERT_EQ(s.outcome, Outcome::accepted);
    ASSERT_EQ(s.iterations.size(), 2u);
    EXPECT_EQ(*s.iterations[0].feedback_out,
              "there should be a leading vehicle stopped behavior, please improve on that");
    EXPECT_EQ(util::read_file(t.path / "run/iter_01/feedback.txt"), *s.iterations[0].feedback_out);
    EXPECT_FALSE(s.iterations[1].feedback_out);
    EXPECT_EQ(m.completion.calls(Role::feature, doc_of(video)), 1);
    EXPECT_EQ(m.completion.calls(Role::script), 2);

    // acceptance is reproducible from the persisted feature files
    auto r = features::feature_vector_from_json(json::parse(util::read_file(t.path / "run/real_features.json")));
    auto v = features::feature_vector_from_json(json::parse(util::read_file(t.path / "run/iter_02/sim_features.json")));
    EXPECT_TRUE(features::similarity(r, v).passed);
}

TEST(Pipeline, StallingModelExhaustsBudget) {
    TempDir t;
    MockStack m(MockMode::stall);
    m.cfg.max_iterations = 3;
    auto real = with(fixture_vector("ped_crossing"), "leading_vehicle_stopped", 1.0);
    auto video = write_video(t.path, "in", {{"fixture", "ped_crossing"}, {"features", values_json(real)}});
    auto s = run_pipeline(video, t.path / "run", m.cfg, m.backends());
    EXPECT_EQ(s.outcome, Outcome::budget_exhausted);
    ASSERT_EQ(s.iterations.size(), 3u);
    EXPECT_TRUE(s.iterations[1].feedback_out);
    EXPECT_FALSE(s.iterations[2].feedback_out);
    EXPECT_FALSE(fs::exists(t.path / "run/iter_03/feedback.txt"));

    MockStack guarded(MockMode::stall);
    guarded.cfg.max_iterations = 3;
    guarded.cfg.stop_on_stall = true;
    auto g = run_pipeline(video, t.path / "guarded", guarded.cfg, guarded.backends());
    EXPECT_EQ(g.outcome, Outcome::budget_exhausted);
    EXPECT_EQ(g.iterations.size(), 2u);
    EXPECT_EQ(g.error->stage, "stall");
}

// Whatever k <= 5 features the first script gets wrong, a faithful model
// converges after one refinement round and a one-fix-per-round model after
// at most k rounds.
TEST(Pipeline, ConvergesWithinViolatedFeatureCount) {
    const auto& tax = features::default_taxonomy();
    std::mt19937 rng(11);
    const auto& examples = registry().examples(Role::script);
    TempDir t;
    for (int trial = 0; trial < 24; ++trial) {
        const std::string name = examples[rng() % examples.size()].label;
        auto vals = fixture_vector(name).values();
        std::vector<std::size_t> idx(tax.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        const int k = static_cast<int>(rng() % 6);
        for (int j = 0; j < k; ++j) {
            double& v = vals[idx[j]];
            v = v == 1.0 ? 0.0 : v == 0.0 ? 1.0 : (rng() % 2 ? 1.0 : 0.0);
        }
        auto video = write_video(t.path, "in" + std::to_string(trial),
                                 {{"fixture", name}, {"features", values_json(features::FeatureVector(vals))}});
        for (MockMode mode : {MockMode::faithful, MockMode::one_at_a_time}) {
            MockStack m(mode);
            m.cfg.max_iterations = k + 1;
            auto dir = t.path / fmt::format("{}-{}", trial, gateway::to_string(mode));
            auto s = run_pipeline(video, dir, m.cfg, m.backends());
            ASSERT_EQ(s.outcome, Outcome::accepted) << name << " k=" << k << " " << gateway::to_string(mode);
            int rounds = static_cast<int>(s.iterations.size()) - 1;
            EXPECT_LE(rounds, k);
            if (mode == MockMode::faithful) EXPECT_EQ(rounds, k == 0 ? 0 : 1);
            EXPECT_EQ(m.completion.calls(Role::feature, doc_of(video)), 1);
        }
    }
}

TEST(Pipeline, ValidationRepairThenContinue) {
    TempDir t;
    MockStack m;
    std::string broken = fixture_script("ped_crossing");
    broken.replace(broken.find("Pedestrian"), 10, "Moose");
    auto video = write_video(t.path, "in", {{"fixture", "ped_crossing"}, {"initial_script", broken}});
    auto s = run_pipeline(video, t.path / "run", m.cfg, m.backends());
    ASSERT_EQ(s.outcome, Outcome::accepted);
    EXPECT_EQ(s.iterations[0].repairs, 1);
    EXPECT_EQ(util::read_file(t.path / "run/iter_01/attempt_1.scenic"), broken);
    EXPECT_NE(util::read_file(t.path / "run/iter_01/attempt_1.diagnostics.jsonl").find("CATALOG_UNKNOWN_CLASS"),
              std::string::npos);
    // the repair is rendered canonically; the tree is the fixture's
    EXPECT_EQ(scenic::parse(s.iterations[0].script).value().tree(),
              scenic::parse(fixture_script("ped_crossing")).value().tree());
    EXPECT_EQ(m.completion.calls(Role::script), 2);
}

TEST(Pipeline, SecondValidationFailureEndsRun) {
    TempDir t;
    MockStack m;
    auto video = write_video(t.path, "in",
                             {{"initial_script", "ego = new Car at (\n"}, {"features", std::vector<double>(10, 0.0)}});
    auto s = run_pipeline(video, t.path / "run", m.cfg, m.backends());
    EXPECT_EQ(s.outcome, Outcome::validation_failed);
    ASSERT_EQ(s.iterations.size(), 1u);
    EXPECT_TRUE(fs::exists(t.path / "run/iter_01/attempt_1.scenic"));
    EXPECT_TRUE(fs::exists(t.path / "run/iter_01/script.scenic"));
    EXPECT_NE(s.error->message.find("the script failed validation: "), std::string::npos);
    EXPECT_EQ(m.completion.calls(Role::script), 2);
    EXPECT_FALSE(s.iterations[0].sim);
}

TEST(Pipeline, SimulatorAndGatewayFailures) {
    TempDir t;
    MockStack m;
    std::string other_model = fixture_script("ped_crossing");
    other_model.replace(other_model.find("scenic.simulators.carla.model"), 29, "scenic.simulators.lgsvl.model");
    auto v1 = write_video(t.path, "sim", {{"fixture", "ped_crossing"}, {"initial_script", other_model}});
    auto s1 = run_pipeline(v1, t.path / "run1", m.cfg, m.backends());
    EXPECT_EQ(s1.outcome, Outcome::simulation_failed);
    EXPECT_EQ(s1.error->stage, "simulation");
    EXPECT_EQ(s1.iterations[0].sim->status, sim::SimStatus::scenario_error);

    auto v2 = write_video(t.path, "gw", {{"fixture", "ped_crossing"}, {"fail_feature", "refusal"}});
    auto s2 = run_pipeline(v2, t.path / "run2", m.cfg, m.backends());
    EXPECT_EQ(s2.outcome, Outcome::gateway_failed);
    EXPECT_EQ(s2.error->stage, "real_features");
    EXPECT_TRUE(s2.iterations.empty());
    // gateway failures are retried on resume
    auto again = resume(t.path / "run2", m.cfg, m.backends());
    EXPECT_EQ(again.outcome, Outcome::gateway_failed);
    EXPECT_EQ(m.completion.calls(Role::feature, doc_of(v2)), 2);

    auto v3 = write_video(t.path, "gs", {{"fixture", "ped_crossing"}, {"fail_script", "rate_limited"}});
    auto s3 = run_pipeline(v3, t.path / "run3", m.cfg, m.backends());
    EXPECT_EQ(s3.outcome, Outcome::gateway_failed);
    EXPECT_EQ(s3.error->stage, "script");
}

TEST(Pipeline, PreconditionsAndLoadErrors) {
    TempDir t;
    MockStack m;
    EXPECT_THROW(run_pipeline(t.path / "absent.mockvid", t.path / "r0", m.cfg, m.backends()), frames::FrameError);
    EXPECT_FALSE(fs::exists(t.path / "r0"));

    auto video = write_video(t.path, "in", {{"fixture", "ped_crossing"}});
    fs::create_directories(t.path / "busy");
    util::write_file_atomic(t.path / "busy/x", "x");
    EXPECT_THROW(run_pipeline(video, t.path / "busy", m.cfg, m.backends()), util::IoError);

    auto s = run_pipeline(video, t.path / "run", m.cfg, m.backends());
    const std::string before = util::read_file(t.path / "run/run.json");
    auto again = resume(t.path / "run", m.cfg, m.backends());
    EXPECT_EQ(again.outcome, Outcome::accepted);
    EXPECT_EQ(util::read_file(t.path / "run/run.json"), before);
    EXPECT_EQ(m.completion.calls(Role::script), 1);

    util::write_file_atomic(t.path / "run/run.json", before.substr(0, before.size() / 2));
    try {
        resume(t.path / "run", m.cfg, m.backends());
        FAIL();
    } catch (const RunLoadError& e) {
        EXPECT_EQ(e.file(), t.path / "run/run.json");
        EXPECT_NE(std::string(e.what()).find("run.json"), std::string::npos);
    }
    util::write_file_atomic(t.path / "run/run.json", before);
    fs::remove(t.path / "run/iter_01/script.scenic");
    try {
        load_run(t.path / "run");
        FAIL();
    } catch (const RunLoadError& e) {
        EXPECT_EQ(e.file(), t.path / "run/iter_01/script.scenic");
    }
    EXPECT_THROW(load_run(t.path / "nowhere"), RunLoadError);
}

TEST(Pipeline, PersistenceOnlyGrows) {
    TempDir t;
    MockStack m;
    auto real = with(with(fixture_vector("highway_debris"), "behind_vehicle_overtaking", 1.0), "sunny_rainy", 0.0);
    auto video = write_video(t.path, "in", {{"fixture", "highway_debris"}, {"features", values_json(real)}});
    std::set<std::string> seen;
    std::vector<std::string> steps;
    auto s = run_pipeline(video, t.path / "run", m.cfg, m.backends(), [&](const RunState& st, Step step, int) {
        auto now = files_under(t.path / "run");
        EXPECT_TRUE(std::includes(now.begin(), now.end(), seen.begin(), seen.end())) << to_string(step);
        seen = now;
        steps.push_back(std::string(to_string(step)));
        // the manifest on disk always matches what the observer sees
        EXPECT_EQ(to_json(load_run(t.path / "run")), to_json(st));
    });
    EXPECT_EQ(s.outcome, Outcome::accepted);
    std::vector<std::string> expected{"input_frames", "real_features", "script",     "simulation", "sim_frames",
                                      "sim_features", "similarity",    "script",     "simulation", "sim_frames",
                                      "sim_features", "similarity",    "finished"};
    EXPECT_EQ(steps, expected);
}

// A SIGKILL after any persisted step, followed by resume, ends exactly like
// an uninterrupted run.
TEST(Pipeline, KillAndResumeAtEveryStep) {
    TempDir t;
    auto real = with(fixture_vector("rain_cut_in"), "leading_vehicle_stopped", 1.0);
    auto video = write_video(t.path, "in", {{"fixture", "rain_cut_in"}, {"features", values_json(real)}});

    MockStack ref_stack(MockMode::one_at_a_time);
    auto reference = run_pipeline(video, t.path / "ref" / "run", ref_stack.cfg, ref_stack.backends());
    ASSERT_EQ(reference.outcome, Outcome::accepted);
    int total_steps = 0;
    {
        MockStack m(MockMode::one_at_a_time);
        run_pipeline(video, t.path / "count" / "run", m.cfg, m.backends(),
                     [&](const RunState&, Step, int) { ++total_steps; });
    }
    ASSERT_GT(total_steps, 8);

    for (int kill_at = 1; kill_at < total_steps; ++kill_at) {
        const fs::path dir = t.path / std::to_string(kill_at) / "run";
        fflush(nullptr);
        pid_t pid = fork();
        ASSERT_GE(pid, 0);
        if (pid == 0) {
            MockStack m(MockMode::one_at_a_time);
            int n = 0;
            run_pipeline(video, dir, m.cfg, m.backends(), [&](const RunState&, Step, int) {
                if (++n == kill_at) ::raise(SIGKILL);
            });
            ::_exit(0);
        }
        int status = 0;
        ASSERT_EQ(waitpid(pid, &status, 0), pid);
        ASSERT_TRUE(WIFSIGNALED(status) && WTERMSIG(status) == SIGKILL) << kill_at;

        MockStack m(MockMode::one_at_a_time);
        auto s = resume(dir, m.cfg, m.backends());
        ASSERT_EQ(s.outcome, reference.outcome) << kill_at;
        ASSERT_EQ(s.iterations.size(), reference.iterations.size()) << kill_at;
        for (std::size_t i = 0; i < s.iterations.size(); ++i) {
            EXPECT_EQ(s.iterations[i].script, reference.iterations[i].script) << kill_at;
            EXPECT_EQ(s.iterations[i].report, reference.iterations[i].report) << kill_at;
            EXPECT_EQ(s.iterations[i].feedback_out, reference.iterations[i].feedback_out) << kill_at;
            EXPECT_EQ(s.iterations[i].sim_features, reference.iterations[i].sim_features) << kill_at;
        }
        EXPECT_EQ(s.seed, reference.seed);
        // real features come from disk once they were persisted
        EXPECT_EQ(m.completion.calls(Role::feature, doc_of(video)), kill_at >= 2 ? 0 : 1) << kill_at;
    }
}

TEST(Report, CountsRatesAndWarnings) {
    TempDir t;
    MockStack m;
    std::vector<fs::path> dirs;
    const char* names[] = {"ped_crossing", "highway_debris", "rain_cut_in", "behind_overtake", "lead_sudden_brake"};
    for (int i = 0; i < 5; ++i) {
        json doc{{"fixture", names[i]}};
        if (i < 2) doc["features"] = values_json(with(fixture_vector(names[i]), "opposite_vehicle_turning", 1.0));
        auto video = write_video(t.path, names[i], doc);
        dirs.push_back(t.path / "runs" / names[i]);
        ASSERT_EQ(run_pipeline(video, dirs.back(), m.cfg, m.backends()).outcome, Outcome::accepted);
    }
    fs::create_directories(t.path / "runs" / "junk");
    dirs.push_back(t.path / "runs" / "junk");

    auto r = build_report(dirs);
    EXPECT_EQ(r.total, 5);
    EXPECT_EQ(r.accepted, 5);
    EXPECT_EQ(r.refined, 2);
    EXPECT_EQ(format_rate(r.refinement_rate), "40.0%");
    EXPECT_EQ(format_rate(r.automation_rate), "100.0%");
    ASSERT_EQ(r.warnings.size(), 1u);
    EXPECT_NE(r.warnings[0].find("junk"), std::string::npos);
    EXPECT_EQ(r.outcomes.size(), 5u);
    EXPECT_TRUE(r.mean_wall_time_s.has_value());
    EXPECT_GT(*r.mean_script_lines, 5.0);

    std::string table = format_table(r);
    EXPECT_NE(table.find("40.0%"), std::string::npos);
    EXPECT_NE(table.find("warnings:"), std::string::npos);
    auto j = to_json(r);
    EXPECT_EQ(j["refinement_rate_text"], "40.0%");
    EXPECT_EQ(j["outcomes"]["budget_exhausted"], 0);

    EXPECT_THROW(build_report({t.path / "runs" / "junk"}), ReportError);
    EXPECT_THROW(build_report({}), ReportError);
}

TEST(Report, RateFormatting) {
    EXPECT_EQ(format_rate(32.0 / 50), "64.0%");
    EXPECT_EQ(format_rate(17.0 / 50), "34.0%");
    EXPECT_EQ(format_rate(0.0), "0.0%");
    EXPECT_EQ(format_rate(2.0 / 3), "66.7%");
}

TEST(Batch, RunsConcurrentlyAndKeepsOrder) {
    TempDir t;
    MockStack m;
    std::vector<BatchJob> jobs;
    const auto& examples = registry().examples(Role::script);
    for (int i = 0; i < 6; ++i) {
        auto video = write_video(t.path / "videos", examples[i].label, {{"fixture", examples[i].label}});
        jobs.push_back({video, reserve_run_dir(t.path / "runs", video)});
    }
    std::mutex mu;
    int finished = 0;
    auto items = run_batch(jobs, m.cfg, m.backends(), 2, [&](const RunState&, Step step, int) {
        std::lock_guard lock(mu);
        if (step == Step::finished) ++finished;
    });
    ASSERT_EQ(items.size(), 6u);
    for (std::size_t i = 0; i < items.size(); ++i) {
        EXPECT_EQ(items[i].job.video, jobs[i].video);
        ASSERT_TRUE(items[i].state) << items[i].error;
        EXPECT_EQ(items[i].state->outcome, Outcome::accepted);
    }
    EXPECT_EQ(finished, 6);

    auto again = reserve_run_dir(t.path / "runs", jobs[0].video);
    EXPECT_NE(again, jobs[0].run_dir);
    EXPECT_TRUE(fs::is_empty(again));
}

TEST(Pipeline, ExternalShimEndToEnd) {
    TempDir t;
    MockStack m;
    sim::ExternalSimBackend shim({"env STUB_SHIM_MODE=ok python3 " + std::string(V2S_TEST_DATA_DIR) + "/shim/stub_shim.py",
                                  std::chrono::seconds(30)});
    auto real = with(fixture_vector("ped_crossing"), "leading_vehicle_stopped", 1.0);
    auto video = write_video(t.path, "in", {{"fixture", "ped_crossing"}, {"features", values_json(real)}});
    auto s = run_pipeline(video, t.path / "run", m.cfg, {m.gateway, shim});
    ASSERT_EQ(s.outcome, Outcome::accepted) << (s.error ? s.error->message : "");
    EXPECT_EQ(s.iterations.size(), 2u);
    EXPECT_TRUE(fs::exists(t.path / "run/iter_02/sim/request.json"));
}
