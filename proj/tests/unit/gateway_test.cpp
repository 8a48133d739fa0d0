#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <thread>

#include <httplib.h>

#include "vid2scenic/gateway/gateway.hpp"
#include "vid2scenic/gateway/http_backend.hpp"
#include "vid2scenic/gateway/mock_backend.hpp"
#include "vid2scenic/scenic/printer.hpp"
#include "vid2scenic/scenic/validator.hpp"
#include "vid2scenic/util/fs.hpp"

namespace fs = std::filesystem;
using namespace vid2scenic;
using namespace vid2scenic::gateway;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

const FewShotRegistry& registry() {
    static const FewShotRegistry r = FewShotRegistry::load(V2S_FIXTURES_DIR);
    return r;
}

const scenic::Catalog& catalog() {
    static const scenic::Catalog c = scenic::load_catalog(fs::path(V2S_FIXTURES_DIR) / "catalog.json");
    return c;
}

frames::FramePack token_pack(const json& video) {
    frames::FramePack p;
    p.format = "token";
    p.indices = {0, 1};
    for (int i : p.indices) {
        p.images.push_back({"token", json{{"frame_index", i}, {"video", video}}.dump()});
    }
    return p;
}

std::string all_keys_json(double v = 0.5) {
    json j = json::object();
    for (const auto& d : features::default_taxonomy().features) j[std::string(d.id)] = v;
    return j.dump();
}

std::string chat_body(const std::string& text) {
    return json{{"choices", json::array({{{"index", 0},
                                           {"finish_reason", "stop"},
                                           {"message", {{"role", "assistant"}, {"content", text}}}}})}}
        .dump();
}

// Local stand-in for a chat-completions endpoint.
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
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

HttpConfig stub_config(const StubServer& s) {
    ::setenv("V2S_TEST_KEY", "sk-test", 1);
    HttpConfig cfg;
    cfg.endpoint = s.url();
    cfg.credential_env = "V2S_TEST_KEY";
    cfg.retry_cap = 3;
    cfg.deadline = 2000ms;
    cfg.backoff_base = 1ms;
    cfg.jitter_seed = 1;
    return cfg;
}

PromptPayload small_payload() {
    PromptPayload p;
    p.role = Role::script;
    p.system_text = "sys";
    p.query_frames = token_pack(json{{"fixture", "ped_crossing"}});
    return p;
}

}  // namespace

TEST(StripToScript, RemovesFencesAndProse) {
    EXPECT_EQ(strip_to_script("Here you go:\n```scenic\nego = new Car at (0, 0)\n```\nHope it helps."),
              "ego = new Car at (0, 0)\n");
    EXPECT_EQ(strip_to_script("```\nparam weather = 'ClearNoon'\nego = new Car\n```"),
              "param weather = 'ClearNoon'\nego = new Car\n");
    EXPECT_EQ(strip_to_script("Sure! This is the scenario.\n\nparam weather = 'ClearNoon'\n"
                              "behavior B():\n    wait\nego = new Car\n\nLet me know if you need changes."),
              "param weather = 'ClearNoon'\nbehavior B():\n    wait\nego = new Car\n");
    std::string plain = "# c\nego = new Car at (0, 0)\n";
    EXPECT_EQ(strip_to_script(plain), plain);
}

TEST(ParseFeatureResponse, AcceptsCompleteObjectInsideProse) {
    auto r = parse_feature_response("The answer is " + all_keys_json(0.25) + " as requested {not json}");
    EXPECT_TRUE(r.warnings.empty());
    for (double v : r.vector.values()) EXPECT_EQ(v, 0.25);
}

TEST(ParseFeatureResponse, MissingKeyIsMalformed) {
    json j = json::parse(all_keys_json());
    j.erase("opposite_vehicle_turning");
    try {
        parse_feature_response(j.dump());
        FAIL();
    } catch (const GatewayError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::malformed_response);
        EXPECT_FALSE(e.retryable());
        EXPECT_NE(e.detail().find("opposite_vehicle_turning"), std::string::npos);
    }
}

TEST(ParseFeatureResponse, ExtraKeysWarnAndSmallOverflowClamps) {
    json j = json::parse(all_keys_json());
    j["flying_car"] = 0.9;
    j["sunny_rainy"] = 1.04;
    j["urban_highway"] = -0.03;
    auto r = parse_feature_response(j.dump());
    EXPECT_EQ(r.vector[0], 1.0);
    EXPECT_EQ(r.vector[1], 0.0);
    EXPECT_EQ(r.warnings.size(), 3u);
    j["sunny_rainy"] = 1.2;
    EXPECT_THROW(parse_feature_response(j.dump()), GatewayError);
    EXPECT_THROW(parse_feature_response("no json here"), GatewayError);
}

TEST(Registry, LoadsTwentyPairsPerRoleInNameOrder) {
    const auto& s = registry().examples(Role::script);
    const auto& f = registry().examples(Role::feature);
    ASSERT_EQ(s.size(), 20u);
    ASSERT_EQ(f.size(), 20u);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end(), [](auto& a, auto& b) { return a.label < b.label; }));
    for (const auto& ex : s) {
        EXPECT_TRUE(std::holds_alternative<std::string>(ex.payload));
        EXPECT_EQ(ex.frames.images.size(), 10u);
    }
    for (const auto& ex : f) EXPECT_TRUE(std::holds_alternative<features::FeatureVector>(ex.payload));
    EXPECT_NE(registry().script("ped_crossing"), nullptr);
}

TEST(Registry, FeatureFixturesAgreeWithScriptHints) {
    for (const auto& ex : registry().examples(Role::feature)) {
        const std::string* text = registry().script(ex.label);
        ASSERT_NE(text, nullptr) << ex.label;
        auto parsed = scenic::parse(*text);
        ASSERT_TRUE(parsed.has_value());
        EXPECT_EQ(std::get<features::FeatureVector>(ex.payload),
                  hint_vector(scenic::static_feature_hints(parsed.value())))
            << ex.label;
    }
}

TEST(Payload, FeedbackNeedsPrior) {
    auto p = small_payload();
    p.feedback = "x";
    EXPECT_THROW(check_payload(p), std::invalid_argument);
    p.prior_script = "ego = new Car\n";
    EXPECT_NO_THROW(check_payload(p));
}

TEST(RequestBody, StructureOrderAndDeterminism) {
    MockBackend mock(registry(), catalog(), MockMode::faithful);
    Gateway gw(mock, registry());
    auto query = token_pack(json{{"fixture", "ped_crossing"}});
    auto p = gw.script_prompt(query, std::string("fix it"), std::string("ego = new Car\n"));
    std::string a = build_request_body(p, "m", 0.2);
    std::string b = build_request_body(gw.script_prompt(query, std::string("fix it"), std::string("ego = new Car\n")),
                                       "m", 0.2);
    EXPECT_EQ(a, b);

    json j = json::parse(a);
    EXPECT_EQ(j["model"], "m");
    EXPECT_EQ(j["temperature"], 0.2);
    const auto& msgs = j["messages"];
    ASSERT_EQ(msgs.size(), 1u + 2 * 20 + 1);
    EXPECT_EQ(msgs[0]["role"], "system");
    const auto& examples = registry().examples(Role::script);
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& user = msgs[1 + 2 * i];
        const auto& assistant = msgs[2 + 2 * i];
        EXPECT_EQ(user["role"], "user");
        EXPECT_NE(user["content"][0]["text"].get<std::string>().find(examples[i].label), std::string::npos);
        ASSERT_EQ(user["content"].size(), 11u);
        EXPECT_EQ(user["content"][1]["type"], "image_url");
        EXPECT_EQ(user["content"][1]["image_url"]["url"].get<std::string>().rfind("data:image/jpeg;base64,", 0), 0u);
        EXPECT_EQ(assistant["role"], "assistant");
        EXPECT_EQ(assistant["content"], std::get<std::string>(examples[i].payload));
    }
    const auto& last = msgs.back()["content"];
    EXPECT_EQ(last[last.size() - 2]["text"], "Current script:\nego = new Car\n");
    EXPECT_EQ(last[last.size() - 1]["text"], "Feedback:\nfix it");
}

TEST(HttpBackend, MissingCredentialFailsBeforeAnyRequest) {
    ::unsetenv("V2S_UNSET_KEY");
    HttpConfig cfg;
    cfg.endpoint = "http://127.0.0.1:9/v1/chat/completions";
    cfg.credential_env = "V2S_UNSET_KEY";
    EXPECT_THROW(HttpBackend{cfg}, CredentialError);
}

TEST(HttpBackend, PassesFixedBodyThrough) {
    std::string auth, seen_body;
    StubServer s([&](const httplib::Request& req, httplib::Response& res) {
        auth = req.get_header_value("Authorization");
        seen_body = req.body;
        res.set_content(chat_body("ego = new Car at (0, 0)\n"), "application/json");
    });
    HttpBackend backend(stub_config(s));
    auto p = small_payload();
    Completion c = backend.complete(p);
    EXPECT_EQ(c.text, "ego = new Car at (0, 0)\n");
    EXPECT_EQ(c.attempts, 1);
    EXPECT_EQ(auth, "Bearer sk-test");
    EXPECT_EQ(seen_body, build_request_body(p, c.model, c.temperature));
}

TEST(HttpBackend, RetriesRateLimitThenSucceeds) {
    std::atomic<int> hits{0};
    StubServer s([&](const httplib::Request&, httplib::Response& res) {
        if (++hits <= 2) {
            res.status = 429;
            return;
        }
        res.set_content(chat_body("ok"), "application/json");
    });
    HttpBackend backend(stub_config(s));
    Completion c = backend.complete(small_payload());
    EXPECT_EQ(c.text, "ok");
    EXPECT_EQ(c.attempts, 3);
    EXPECT_EQ(hits.load(), 3);
}

TEST(HttpBackend, ServerErrorsExhaustRetryCap) {
    std::atomic<int> hits{0};
    StubServer s([&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 503;
    });
    auto cfg = stub_config(s);
    cfg.retry_cap = 2;
    HttpBackend backend(cfg);
    try {
        backend.complete(small_payload());
        FAIL();
    } catch (const GatewayError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::transport);
        EXPECT_EQ(e.attempts(), 3);
    }
    EXPECT_EQ(hits.load(), 3);
}

TEST(HttpBackend, SlowServerHitsDeadlineOnEveryAttempt) {
    std::atomic<int> hits{0};
    StubServer s([&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        std::this_thread::sleep_for(700ms);
        res.set_content(chat_body("late"), "application/json");
    });
    auto cfg = stub_config(s);
    cfg.retry_cap = 1;
    cfg.deadline = 200ms;
    HttpBackend backend(cfg);
    auto t0 = std::chrono::steady_clock::now();
    try {
        backend.complete(small_payload());
        FAIL();
    } catch (const GatewayError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::deadline);
        EXPECT_EQ(e.attempts(), 2);
    }
    EXPECT_LT(std::chrono::steady_clock::now() - t0, 1500ms);
    EXPECT_EQ(hits.load(), 2);
}

TEST(HttpBackend, NonRetryableErrorsTryOnce) {
    std::atomic<int> hits{0};
    StubServer s([&](const httplib::Request& req, httplib::Response& res) {
        ++hits;
        if (req.body.find("bad-request") != std::string::npos) {
            res.status = 400;
            return;
        }
        res.set_content(R"({"choices": []})", "application/json");
    });
    HttpBackend backend(stub_config(s));
    try {
        backend.complete(small_payload());
        FAIL();
    } catch (const GatewayError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::malformed_response);
        EXPECT_EQ(e.attempts(), 1);
    }
    auto p = small_payload();
    p.system_text = "bad-request";
    try {
        backend.complete(p);
        FAIL();
    } catch (const GatewayError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::refusal);
        EXPECT_EQ(e.attempts(), 1);
    }
    EXPECT_EQ(hits.load(), 2);
}

TEST(HttpBackend, RespectsInFlightCap) {
    std::atomic<int> now{0}, peak{0};
    StubServer s([&](const httplib::Request&, httplib::Response& res) {
        int n = ++now;
        int p = peak.load();
        while (n > p && !peak.compare_exchange_weak(p, n)) {
        }
        std::this_thread::sleep_for(80ms);
        --now;
        res.set_content(chat_body("ok"), "application/json");
    });
    auto cfg = stub_config(s);
    cfg.max_in_flight = 1;
    HttpBackend backend(cfg);
    std::vector<std::thread> ts;
    for (int i = 0; i < 3; ++i) ts.emplace_back([&] { backend.complete(small_payload()); });
    for (auto& t : ts) t.join();
    EXPECT_EQ(peak.load(), 1);
}

TEST(HttpBackend, FeatureRoleUsesFeatureModelAndTemperature) {
    std::string body;
    StubServer s([&](const httplib::Request& req, httplib::Response& res) {
        body = req.body;
        res.set_content(chat_body(all_keys_json(1.0)), "application/json");
    });
    auto cfg = stub_config(s);
    cfg.feature_model = "vision-x";
    HttpBackend backend(cfg);
    Gateway gw(backend, registry());
    auto r = gw.extract_features(token_pack(json{{"fixture", "ped_crossing"}}));
    EXPECT_EQ(r.vector[3], 1.0);
    EXPECT_EQ(r.call.model, "vision-x");
    EXPECT_EQ(json::parse(body)["temperature"], 0.0);
    EXPECT_EQ(json::parse(body)["messages"].size(), 1u + 2 * 20 + 1);
}

TEST(MockBackend, CannedFixtureScriptVerbatim) {
    MockBackend mock(registry(), catalog(), MockMode::faithful);
    Gateway gw(mock, registry());
    auto r = gw.generate_script(token_pack(json{{"fixture", "ped_crossing"}}));
    EXPECT_EQ(r.script, *registry().script("ped_crossing"));
    EXPECT_EQ(mock.calls(Role::script), 1);
}

TEST(MockBackend, FeedbackAddsLeadingStop) {
    MockBackend mock(registry(), catalog(), MockMode::faithful);
    Gateway gw(mock, registry());
    auto video = json{{"fixture", "ped_crossing"}};
    const std::string prior = *registry().script("ped_crossing");
    auto r = gw.generate_script(token_pack(video),
                                std::string("there should be a leading vehicle stopped behavior, please improve on that"),
                                prior);
    auto before = scenic::static_feature_hints(scenic::parse(prior).value());
    auto parsed = scenic::parse(r.script);
    ASSERT_TRUE(parsed.has_value()) << r.script;
    EXPECT_TRUE(scenic::validate(parsed.value(), catalog()).empty());
    auto after = scenic::static_feature_hints(parsed.value());
    before.insert("leading_vehicle_stopped");
    EXPECT_EQ(after, before);
}

TEST(MockBackend, StallReturnsPriorUnchanged) {
    MockBackend mock(registry(), catalog(), MockMode::stall);
    Gateway gw(mock, registry());
    auto r = gw.generate_script(token_pack(json{{"fixture", "ped_crossing"}}),
                                std::string("there should be a leading vehicle stopped behavior, please improve on that"),
                                std::string("ego = new Car at (0, 0)\n"));
    EXPECT_EQ(r.script, "ego = new Car at (0, 0)\n");
}

TEST(MockBackend, FeatureVectorFromScriptHints) {
    MockBackend mock(registry(), catalog(), MockMode::faithful);
    Gateway gw(mock, registry());
    for (const auto& ex : registry().examples(Role::script)) {
        const auto& text = std::get<std::string>(ex.payload);
        json video{{"kind", "sim-video"}, {"script", text}};
        auto r = gw.extract_features(token_pack(video));
        EXPECT_EQ(r.vector, hint_vector(scenic::static_feature_hints(scenic::parse(text).value()))) << ex.label;
        EXPECT_EQ(mock.calls(Role::feature, video), 1);
    }
}

TEST(MockBackend, ExplicitFeaturesAndScriptedFailures) {
    MockBackend mock(registry(), catalog(), MockMode::faithful);
    Gateway gw(mock, registry());
    std::vector<double> vals(10, 0.0);
    vals[4] = 0.9;
    auto r = gw.extract_features(token_pack(json{{"features", vals}}));
    EXPECT_EQ(r.vector[4], 0.9);
    try {
        gw.extract_features(token_pack(json{{"fixture", "ped_crossing"}, {"fail_feature", "refusal"}}));
        FAIL();
    } catch (const GatewayError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::refusal);
    }
    frames::FramePack jpeg;
    jpeg.images.push_back({"jpeg", "\xff\xd8"});
    EXPECT_THROW(gw.extract_features(jpeg), GatewayError);
}

// For random feedback on corpus scripts, the edited script evidences
// exactly the requested behavior set and the requested environment side.
TEST(MockEdits, FaithfulFeedbackHitsTarget) {
    const auto& tax = features::default_taxonomy();
    std::mt19937 rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const auto& examples = registry().examples(Role::script);
        const auto& text = std::get<std::string>(examples[rng() % examples.size()].payload);
        auto tree = scenic::parse(text).value().tree();
        auto hints = scenic::static_feature_hints(tree);
        auto target = hint_vector(hints).values();

        std::vector<features::FeedbackItem> items;
        for (std::size_t i = 0; i < tax.size(); ++i) {
            if (rng() % 3 != 0) continue;
            bool up = tax.at(i).kind == features::FeatureKind::environment ? rng() % 2 == 0 : target[i] == 0.0;
            items.push_back({i, up ? features::GapDirection::missing_in_sim : features::GapDirection::extra_in_sim});
            target[i] = up ? 1.0 : 0.0;
        }
        auto edited = apply_feature_feedback(tree, items);
        auto reparsed = scenic::parse(scenic::render(edited));
        ASSERT_TRUE(reparsed.has_value());
        EXPECT_TRUE(scenic::validate(reparsed.value(), catalog()).empty());
        EXPECT_EQ(hint_vector(scenic::static_feature_hints(reparsed.value())).values(), target);
    }
}

TEST(MockEdits, CatalogRepairCleansNegativeScripts) {
    fs::path dir = fs::path(V2S_TEST_DATA_DIR) / "negative";
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() != ".scenic") continue;
        auto parsed = scenic::parse(util::read_file(e.path()));
        if (!parsed.has_value()) continue;  // structural errors are not catalog errors
        auto fixed = scenic::parse(scenic::render(repair_for_catalog(parsed.value().tree(), catalog())));
        ASSERT_TRUE(fixed.has_value());
        EXPECT_TRUE(scenic::validate(fixed.value(), catalog()).empty()) << e.path();
    }
}
