// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <sys/wait.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "mock_stack.hpp"
#include "oracle.hpp"
#include "vid2scenic/features/similarity.hpp"
#include "vid2scenic/frames/frame_pack.hpp"
#include "vid2scenic/gateway/gateway.hpp"
#include "vid2scenic/gateway/http_backend.hpp"
#include "vid2scenic/pipeline/batch.hpp"
#include "vid2scenic/pipeline/report.hpp"
#include "vid2scenic/scenic/printer.hpp"
#include "vid2scenic/scenic/validator.hpp"

using namespace vid2scenic;
using namespace v2s_test;
using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

namespace {

/// Thrown by `require` with the reason a criterion failed.
struct Unmet {
    std::string why;
};

void require(bool ok, const std::string& why) {
    if (!ok) throw Unmet{why};
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

features::FeatureVector with(features::FeatureVector v, std::string_view id, double value) {
    auto vals = v.values();
    vals[*features::default_taxonomy().index_of(id)] = value;
    return features::FeatureVector(vals);
}

// ---- similarity ---------------------------------------------------------

features::FeatureVector random_vector(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    features::FeatureVector::Values v{};
    for (auto& x : v) {
        switch (rng() % 3) {
            case 0: x = u(rng); break;
            case 1: x = static_cast<double>(rng() % 21) / 20.0; break;
            default: x = rng() % 2 ? 1.0 : 0.0; break;
        }
    }
    return features::FeatureVector(v);
}

void similarity_oracle() {
    std::mt19937_64 rng(2024);
    const auto taus = oracle::default_taus();
    auto t0 = Clock::now();
    for (int i = 0; i < 1000; ++i) {
        auto a = random_vector(rng);
        auto b = random_vector(rng);
        auto r = features::similarity(a, b);
        auto want = oracle::violations(a.values(), b.values(), taus);
        require(r.violations.size() == want.size(), fmt::format("pair {}: violation count differs", i));
        for (std::size_t k = 0; k < want.size(); ++k) {
            require(static_cast<int>(r.violations[k].feature_index) == want[k].first && r.violations[k].gap == want[k].second,
                    fmt::format("pair {}: violation {} differs", i, k));
        }
        require(r.passed == want.empty(), fmt::format("pair {}: passed flag", i));

        auto back = features::similarity(b, a);
        for (std::size_t k = 0; k < features::kFeatureCount; ++k) {
            require(back.gaps[k] == -r.gaps[k], fmt::format("pair {}: not antisymmetric at {}", i, k));
        }
        require(back.violations.size() == r.violations.size(), fmt::format("pair {}: reverse violation count", i));
        auto self = features::similarity(a, a);
        require(self.passed && self.violations.empty(), fmt::format("pair {}: self comparison failed", i));
        for (double g : self.gaps) require(g == 0.0, "self gap not zero");
    }
    double s = seconds_since(t0);
    require(s < 5.0, fmt::format("took {:.2f} s", s));
}

// ---- taxonomy -----------------------------------------------------------

features::FeatureVector load_vector(const std::string& name) {
    return features::feature_vector_from_json(
        json::parse(util::read_file(fs::path(V2S_TEST_DATA_DIR) / "similarity" / name)));
}

void taxonomy_table() {
    const auto& t = features::default_taxonomy();
    require(t.size() == 10, "taxonomy size");
    for (std::size_t i = 0; i < 10; ++i) {
        require(t.at(i).display_name == oracle::kTable[i].name, fmt::format("row {} name", i));
        require(t.at(i).default_threshold == oracle::kTable[i].tau, fmt::format("row {} threshold", i));
    }
    // gap 0.25 on 0.3-threshold features passes
    auto env = features::similarity(load_vector("gap_env_real.json"), load_vector("gap_env_sim.json"));
    require(env.passed, "environment gap 0.25 should pass under 0.3");
    require(std::abs(env.gaps[0]) == 0.25 && std::abs(env.gaps[1]) == 0.25, "environment fixture gaps");
    // and violates on 0.2-threshold features
    auto beh = features::similarity(load_vector("gap_behavior_real.json"), load_vector("gap_behavior_sim.json"));
    require(!beh.passed && !beh.violations.empty(), "behavior gap 0.25 should violate under 0.2");
    for (const auto& v : beh.violations) {
        require(std::abs(v.gap) == 0.25 && v.threshold == 0.2, "behavior fixture gaps");
    }
}

// ---- feedback -----------------------------------------------------------

void feedback_templates() {
    using features::GapDirection;
    using features::Violation;
    require(features::synthesize_feedback({Violation{4, -1.0, 0.2, GapDirection::missing_in_sim}}) ==
                "there should be a leading vehicle stopped behavior, please improve on that",
            "missing-in-sim sentence");
    require(features::synthesize_feedback({Violation{8, 1.0, 0.2, GapDirection::extra_in_sim}}) ==
                "there shouldn't be a behind vehicle overtaking behavior, please improve on that",
            "extra-in-sim sentence");
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        auto a = random_vector(rng);
        auto b = random_vector(rng);
        auto r = features::similarity(a, b);
        if (r.passed) continue;
        std::string first = features::synthesize_feedback(r.violations);
        std::string second = features::synthesize_feedback(features::similarity(a, b).violations);
        require(first == second, "feedback not byte-stable");
        std::string want;
        for (const auto& v : r.violations) {
            if (!want.empty()) want += "\n";
            want += oracle::sentence(static_cast<int>(v.feature_index), v.gap < 0);
        }
        require(first == want, fmt::format("feedback differs from template: {}", first));
    }
}

// ---- parser -------------------------------------------------------------

void parser_corpus() {
    const auto& cat = catalog();
    int count = 0;
    for (const auto& e : fs::directory_iterator(fs::path(V2S_FIXTURES_DIR) / "script")) {
        fs::path p = e.path() / "script.scenic";
        if (!fs::exists(p)) continue;
        ++count;
        auto parsed = scenic::parse(util::read_file(p));
        require(parsed.has_value(), p.string() + " does not parse");
        require(scenic::validate(parsed.value(), cat).empty(), p.string() + " has diagnostics");
        auto again = scenic::parse(scenic::render(parsed.value()));
        require(again.has_value() && again.value().tree() == parsed.value().tree(), p.string() + " round trip");
    }
    require(count == 20, fmt::format("{} corpus scripts, want 20", count));

    const fs::path neg = fs::path(V2S_TEST_DATA_DIR) / "negative";
    auto expected = json::parse(util::read_file(neg / "expected.json"));
    require(expected.size() == 10, "want 10 negative scripts");
    for (const auto& [name, code] : expected.items()) {
        auto parsed = scenic::parse(util::read_file(neg / (name + ".scenic")));
        auto diags = parsed.has_value() ? scenic::validate(parsed.value(), cat) : parsed.diagnostics();
        bool found = std::any_of(diags.begin(), diags.end(), [&](const auto& d) { return d.code == code; });
        require(found, fmt::format("{} lacks {}", name, code.get<std::string>()));
    }
}

// ---- convergence --------------------------------------------------------

void convergence() {
    using gateway::MockMode;
    using pipeline::Outcome;
    const auto& tax = features::default_taxonomy();
    const auto& examples = registry().examples(gateway::Role::script);
    std::mt19937 rng(5);
    TempDir t;

    for (int trial = 0; trial < 30; ++trial) {
        const std::string name = examples[rng() % examples.size()].label;
        auto vals = fixture_vector(name).values();
        std::vector<std::size_t> idx(tax.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        const int k = 1 + static_cast<int>(rng() % 5);
        for (int j = 0; j < k; ++j) {
            double& v = vals[idx[j]];
            v = v == 1.0 ? 0.0 : v == 0.0 ? 1.0 : (rng() % 2 ? 1.0 : 0.0);
        }
        auto video = write_video(t.path, fmt::format("c{}", trial),
                                 {{"fixture", name}, {"features", values_json(features::FeatureVector(vals))}});
        for (MockMode mode : {MockMode::faithful, MockMode::one_at_a_time}) {
            MockStack m(mode);
            m.cfg.max_iterations = k + 1;
            auto s = pipeline::run_pipeline(video, t.path / fmt::format("c{}-{}", trial, gateway::to_string(mode)),
                                            m.cfg, m.backends());
            int rounds = static_cast<int>(s.iterations.size()) - 1;
            require(s.outcome == Outcome::accepted && rounds <= k,
                    fmt::format("{} with k={} ({}): {} after {} refinements", name, k, gateway::to_string(mode),
                                s.outcome ? pipeline::to_string(*s.outcome) : "unfinished", rounds));
        }
    }

    // stall: exactly max_iterations
    {
        MockStack m(MockMode::stall);
        m.cfg.max_iterations = 5;
        auto real = with(fixture_vector("ped_crossing"), "leading_vehicle_stopped", 1.0);
        auto video = write_video(t.path, "stall", {{"fixture", "ped_crossing"}, {"features", values_json(real)}});
        auto s = pipeline::run_pipeline(video, t.path / "stall-run", m.cfg, m.backends());
        require(s.outcome == Outcome::budget_exhausted && s.iterations.size() == 5, "stalling run");
    }

    // kill mid-run, resume, compare with an uninterrupted run
    auto real = with(fixture_vector("rain_cut_in"), "leading_vehicle_stopped", 1.0);
    auto video = write_video(t.path, "kill", {{"fixture", "rain_cut_in"}, {"features", values_json(real)}});
    MockStack ref_stack(MockMode::one_at_a_time);
    auto reference = pipeline::run_pipeline(video, t.path / "ref", ref_stack.cfg, ref_stack.backends());
    require(reference.outcome == Outcome::accepted && reference.iterations.size() >= 2, "reference run");
    for (int kill_at : {3, 7, 10}) {
        const fs::path dir = t.path / fmt::format("killed-{}", kill_at);
        std::cout.flush();
        pid_t pid = fork();
        require(pid >= 0, "fork");
        if (pid == 0) {
            MockStack m(MockMode::one_at_a_time);
            int n = 0;
            pipeline::run_pipeline(video, dir, m.cfg, m.backends(), [&](const pipeline::RunState&, pipeline::Step, int) {
                if (++n == kill_at) ::raise(SIGKILL);
            });
            ::_exit(0);
        }
        int status = 0;
        waitpid(pid, &status, 0);
        require(WIFSIGNALED(status), fmt::format("child for step {} was not killed", kill_at));
        MockStack m(MockMode::one_at_a_time);
        auto s = pipeline::resume(dir, m.cfg, m.backends());
        require(s.outcome == reference.outcome && s.iterations.size() == reference.iterations.size(),
                fmt::format("resume after step {} differs", kill_at));
        for (std::size_t i = 0; i < s.iterations.size(); ++i) {
            require(s.iterations[i].script == reference.iterations[i].script &&
                        s.iterations[i].report == reference.iterations[i].report,
                    fmt::format("resume after step {}: iteration {} differs", kill_at, i + 1));
        }
    }
}

// ---- report -------------------------------------------------------------

void report_fixture() {
    const auto& examples = registry().examples(gateway::Role::script);
    const std::string broken_syntax = "ego = new Car at (0, 0\n";
    std::string wrong_model = fixture_script("ped_crossing");
    wrong_model.replace(wrong_model.find("scenic.simulators.carla.model"), 29, "scenic.simulators.lgsvl.model");

    TempDir t;
    std::vector<pipeline::BatchJob> jobs;
    auto add = [&](const std::string& tag, json doc) {
        auto video = write_video(t.path / "in", fmt::format("{:02}-{}", jobs.size(), tag), std::move(doc));
        jobs.push_back({video, t.path / "runs" / video.stem()});
    };
    for (int i = 0; i < 15; ++i) add("first", {{"fixture", examples[i % examples.size()].label}});
    for (int i = 0; i < 17; ++i) {
        const std::string name = examples[(i + 3) % examples.size()].label;
        auto v = fixture_vector(name);
        const double flipped = v[0] == 1.0 ? 0.0 : 1.0;
        add("refined", {{"fixture", name}, {"features", values_json(with(v, "sunny_rainy", flipped))}});
    }
    for (int i = 0; i < 6; ++i) {
        const std::string name = examples[i].label;
        add("budget", {{"fixture", name}, {"features", values_json(with(fixture_vector(name), "random_object_on_road", 0.5))}});
    }
    for (int i = 0; i < 6; ++i) add("invalid", {{"initial_script", broken_syntax}, {"features", values_json(fixture_vector("ped_crossing"))}});
    for (int i = 0; i < 3; ++i) add("simfail", {{"initial_script", wrong_model}, {"fixture", "ped_crossing"}});
    for (int i = 0; i < 3; ++i) add("refused", {{"fixture", "ped_crossing"}, {"fail_script", "refusal"}});
    require(jobs.size() == 50, "fixture should have 50 runs");

    auto t0 = Clock::now();
    MockStack m;
    auto items = pipeline::run_batch(jobs, m.cfg, m.backends(), 2);
    std::vector<fs::path> dirs;
    for (const auto& it : items) {
        require(it.state.has_value(), "run did not start: " + it.error);
        dirs.push_back(it.job.run_dir);
    }
    auto r = pipeline::build_report(dirs);
    double s = seconds_since(t0);
    require(r.total == 50 && r.accepted == 32 && r.refined == 17,
            fmt::format("counts total={} accepted={} refined={}", r.total, r.accepted, r.refined));
    require(pipeline::format_rate(r.automation_rate) == "64.0%", "automation rate " + pipeline::format_rate(r.automation_rate));
    require(pipeline::format_rate(r.refinement_rate) == "34.0%", "refinement rate " + pipeline::format_rate(r.refinement_rate));
    require(r.outcomes.at("budget_exhausted") == 6 && r.outcomes.at("validation_failed") == 6 &&
                r.outcomes.at("simulation_failed") == 3 && r.outcomes.at("gateway_failed") == 3,
            "outcome breakdown " + json(r.outcomes).dump());
    require(s < 60.0, fmt::format("took {:.1f} s", s));
}

// ---- gateway transport --------------------------------------------------

std::string chat_body(const std::string& text) {
    return json{{"choices", json::array({{{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}}}})}}.dump();
}

class StubServer {
public:
    explicit StubServer(httplib::Server::Handler h) {
        server_.Post("/v1/chat/completions", std::move(h));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }
    gateway::HttpConfig config() const {
        ::setenv("V2S_ACCEPTANCE_KEY", "sk-acceptance", 1);
        gateway::HttpConfig cfg;
        cfg.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
        cfg.credential_env = "V2S_ACCEPTANCE_KEY";
        cfg.retry_cap = 3;
        cfg.deadline = 2000ms;
        cfg.backoff_base = 1ms;
        cfg.jitter_seed = 1;
        return cfg;
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

frames::FramePack token_pack() {
    frames::FramePack p;
    p.format = "token";
    p.indices = {0, 1};
    for (int i : p.indices) p.images.push_back({"token", json{{"frame_index", i}, {"video", {{"fixture", "ped_crossing"}}}}.dump()});
    return p;
}

void gateway_transport() {
    gateway::MockBackend mock(registry(), catalog(), gateway::MockMode::faithful);
    gateway::Gateway gw(mock, registry());
    const auto query = token_pack();
    const auto payload = gw.script_prompt(query, std::string("fix it"), std::string("ego = new Car\n"));

    // retry schedule
    {
        std::atomic<int> hits{0};
        std::vector<std::string> bodies;
        std::mutex mu;
        StubServer s([&](const httplib::Request& req, httplib::Response& res) {
            {
                std::lock_guard lock(mu);
                bodies.push_back(req.body);
            }
            if (++hits <= 2) {
                res.status = 429;
                return;
            }
            res.set_content(chat_body("ok"), "application/json");
        });
        gateway::HttpBackend backend(s.config());
        auto c = backend.complete(payload);
        require(c.text == "ok" && c.attempts == 3 && hits == 3, fmt::format("429,429,200 took {} attempts", hits.load()));
        require(bodies.size() == 3 && bodies[0] == bodies[1] && bodies[1] == bodies[2], "retried bodies differ");
        require(bodies[0] == gateway::build_request_body(payload, s.config().script_model, s.config().script_temperature),
                "sent body differs from the assembled one");
    }
    // deadline
    {
        std::atomic<int> hits{0};
        StubServer s([&](const httplib::Request&, httplib::Response& res) {
            ++hits;
            std::this_thread::sleep_for(700ms);
            res.set_content(chat_body("late"), "application/json");
        });
        auto cfg = s.config();
        cfg.retry_cap = 1;
        cfg.deadline = 200ms;
        gateway::HttpBackend backend(cfg);
        auto t0 = Clock::now();
        bool hit_deadline = false;
        try {
            backend.complete(payload);
        } catch (const gateway::GatewayError& e) {
            hit_deadline = e.kind() == gateway::ErrorKind::deadline && e.attempts() == 2;
        }
        require(hit_deadline, "slow server did not end in a deadline error after 2 attempts");
        require(seconds_since(t0) < 1.5, "deadline not enforced");
    }
    // deterministic body assembly
    for (int i = 0; i < 5; ++i) {
        auto again = gw.script_prompt(query, std::string("fix it"), std::string("ego = new Car\n"));
        require(gateway::build_request_body(again, "m", 0.2) == gateway::build_request_body(payload, "m", 0.2),
                "request body not byte-identical");
    }
    // feature parsing
    json all = json::object();
    for (const auto& d : features::default_taxonomy().features) all[std::string(d.id)] = 0.5;
    auto ok = gateway::parse_feature_response("here: " + all.dump());
    require(ok.warnings.empty() && ok.vector[3] == 0.5, "complete answer rejected");
    for (const auto& d : features::default_taxonomy().features) {
        json missing = all;
        missing.erase(std::string(d.id));
        bool rejected = false;
        try {
            gateway::parse_feature_response(missing.dump());
        } catch (const gateway::GatewayError& e) {
            rejected = e.kind() == gateway::ErrorKind::malformed_response;
        }
        require(rejected, fmt::format("answer without {} accepted", d.id));
    }
    json near = all;
    near["sunny_rainy"] = 1.04;
    near["urban_highway"] = -0.05;
    auto clamped = gateway::parse_feature_response(near.dump());
    require(clamped.vector[0] == 1.0 && clamped.vector[1] == 0.0 && clamped.warnings.size() == 2, "clamping");
    near["sunny_rainy"] = 1.2;
    bool far_rejected = false;
    try {
        gateway::parse_feature_response(near.dump());
    } catch (const gateway::GatewayError&) {
        far_rejected = true;
    }
    require(far_rejected, "value far outside [0, 1] accepted");
}

// ---- frame sampling -----------------------------------------------------

void frame_sampling() {
    require(frames::sample_indices(300, 10) == std::vector<int>{0, 33, 66, 99, 132, 166, 199, 232, 265, 299},
            "sample_indices(300, 10)");
    std::mt19937 rng(300);
    for (int trial = 0; trial < 1000; ++trial) {
        int fc = 1 + static_cast<int>(rng() % 200000);
        int n = 1 + static_cast<int>(rng() % std::min(fc, 64));
        auto idx = frames::sample_indices(fc, n);
        require(static_cast<int>(idx.size()) == n && idx.front() == 0, fmt::format("({}, {}) size/start", fc, n));
        if (n >= 2) require(idx.back() == fc - 1, fmt::format("({}, {}) last index", fc, n));
        for (std::size_t i = 1; i < idx.size(); ++i) {
            require(idx[i - 1] < idx[i], fmt::format("({}, {}) not increasing", fc, n));
        }
    }
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void()>>> criteria = {
        {"similarity oracle equivalence", similarity_oracle},
        {"taxonomy table fidelity", taxonomy_table},
        {"feedback templates", feedback_templates},
        {"parser corpus", parser_corpus},
        {"convergence property", convergence},
        {"report fixture", report_fixture},
        {"gateway transport", gateway_transport},
        {"frame sampling", frame_sampling},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        auto t0 = Clock::now();
        std::string why;
        try {
            check();
        } catch (const Unmet& u) {
            why = u.why;
        } catch (const std::exception& e) {
            why = std::string("exception: ") + e.what();
        }
        if (why.empty()) {
            std::cout << fmt::format("PASS  {} ({:.2f} s)\n", name, seconds_since(t0));
        } else {
            ++failed;
            std::cout << fmt::format("FAIL  {}: {}\n", name, why);
        }
        std::cout.flush();
    }
    std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
