#include <httplib.h>

#include "vid2scenic/gateway/http_backend.hpp"

#include <condition_variable>
#include <cstdlib>
#include <regex>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "vid2scenic/util/digest.hpp"

using nlohmann::json;

namespace vid2scenic::gateway {

namespace {

// Process-wide cap on concurrent requests. The most recently constructed
// backend sets the capacity.
class InFlight {
public:
    static InFlight& instance() {
        static InFlight g;
        return g;
    }
    void set_capacity(int n) {
        std::lock_guard lk(mu_);
        cap_ = std::max(1, n);
        cv_.notify_all();
    }
    void acquire() {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return used_ < cap_; });
        ++used_;
    }
    void release() {
        std::lock_guard lk(mu_);
        --used_;
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int cap_ = 4;
    int used_ = 0;
};

struct Slot {
    Slot() { InFlight::instance().acquire(); }
    ~Slot() { InFlight::instance().release(); }
};

json image_part(const frames::EncodedImage& img) {
    if (img.format == "jpeg") {
        return json{{"type", "image_url"},
                    {"image_url", {{"url", "data:image/jpeg;base64," + util::base64_encode(img.bytes)}}}};
    }
    // mock token frames travel as text
    return json{{"type", "text"}, {"text", img.bytes}};
}

json frames_message(const std::string& label, const frames::FramePack& pack) {
    json content = json::array();
    content.push_back({{"type", "text"}, {"text", label}});
    for (const auto& img : pack.images) content.push_back(image_part(img));
    return json{{"role", "user"}, {"content", content}};
}

std::uint64_t splitmix(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace

std::string build_request_body(const PromptPayload& payload, const std::string& model, double temperature) {
    check_payload(payload);
    json messages = json::array();
    messages.push_back({{"role", "system"}, {"content", payload.system_text}});
    for (const auto& ex : payload.examples) {
        messages.push_back(frames_message(fmt::format("Example video '{}':", ex.label), ex.frames));
        std::string answer = std::holds_alternative<std::string>(ex.payload)
                                 ? std::get<std::string>(ex.payload)
                                 : feature_payload_text(std::get<features::FeatureVector>(ex.payload));
        messages.push_back({{"role", "assistant"}, {"content", answer}});
    }
    json query = frames_message("Query video:", payload.query_frames);
    if (payload.prior_script) {
        query["content"].push_back({{"type", "text"}, {"text", "Current script:\n" + *payload.prior_script}});
    }
    if (payload.feedback) {
        query["content"].push_back({{"type", "text"}, {"text", "Feedback:\n" + *payload.feedback}});
    }
    messages.push_back(query);
    json body{{"model", model}, {"temperature", temperature}, {"messages", messages}};
    return body.dump();
}

std::string parse_completion_body(const std::string& body) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw GatewayError(ErrorKind::malformed_response, "response body is not a JSON object");
    }
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
        throw GatewayError(ErrorKind::malformed_response, "response has no choices");
    }
    const json& choice = j["choices"][0];
    if (choice.value("finish_reason", std::string()) == "content_filter") {
        throw GatewayError(ErrorKind::refusal, "completion stopped by content filter");
    }
    const json msg = choice.value("message", json::object());
    if (msg.contains("refusal") && msg["refusal"].is_string()) {
        throw GatewayError(ErrorKind::refusal, msg["refusal"].get<std::string>());
    }
    std::string text;
    if (msg.contains("content") && msg["content"].is_string()) {
        text = msg["content"].get<std::string>();
    } else if (msg.contains("content") && msg["content"].is_array()) {
        for (const auto& part : msg["content"]) {
            if (part.is_object() && part.value("type", "") == "text") text += part.value("text", "");
        }
    }
    if (text.empty()) throw GatewayError(ErrorKind::malformed_response, "first choice has no text content");
    return text;
}

HttpBackend::HttpBackend(HttpConfig cfg) : cfg_(std::move(cfg)), rng_state_(cfg_.jitter_seed) {
    const char* tok = std::getenv(cfg_.credential_env.c_str());
    if (!tok || !*tok) {
        throw CredentialError(fmt::format("environment variable {} is not set", cfg_.credential_env));
    }
    token_ = tok;
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(cfg_.endpoint, m, url)) {
        throw std::invalid_argument(fmt::format("endpoint '{}' is not an http(s) URL", cfg_.endpoint));
    }
    scheme_host_port_ = m[1];
    path_ = m[2].matched ? std::string(m[2]) : "/";
    if (cfg_.retry_cap < 0) throw std::invalid_argument("retry_cap must be >= 0");
    InFlight::instance().set_capacity(cfg_.max_in_flight);
}

std::chrono::milliseconds HttpBackend::backoff(int retry) {
    std::uint64_t r;
    {
        std::lock_guard lk(rng_mu_);
        r = splitmix(rng_state_);
    }
    const auto base = cfg_.backoff_base.count();
    const long long exp = base * (1LL << std::min(retry, 16));
    const long long jitter = base > 0 ? static_cast<long long>(r % static_cast<std::uint64_t>(base)) : 0;
    return std::chrono::milliseconds(exp + jitter);
}

std::string HttpBackend::attempt(const std::string& body) {
    Slot slot;
    httplib::Client cli(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.deadline);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.deadline - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());
    cli.set_bearer_token_auth(token_);

    auto res = cli.Post(path_, body, "application/json");
    if (!res) {
        auto err = res.error();
        if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout ||
            err == httplib::Error::Write) {
            throw GatewayError(ErrorKind::deadline,
                               fmt::format("no complete response within {} ms ({})", cfg_.deadline.count(),
                                           httplib::to_string(err)));
        }
        throw GatewayError(ErrorKind::transport, httplib::to_string(err));
    }
    if (res->status == 429) throw GatewayError(ErrorKind::rate_limited, "HTTP 429");
    if (res->status >= 500) throw GatewayError(ErrorKind::transport, fmt::format("HTTP {}", res->status));
    if (res->status != 200) {
        throw GatewayError(ErrorKind::refusal, fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 200)));
    }
    return parse_completion_body(res->body);
}

Completion HttpBackend::complete(const PromptPayload& payload) {
    const bool script = payload.role == Role::script;
    Completion c;
    c.model = script ? cfg_.script_model : cfg_.feature_model;
    c.temperature = script ? cfg_.script_temperature : cfg_.feature_temperature;
    const std::string body = build_request_body(payload, c.model, c.temperature);

    for (int n = 1;; ++n) {
        last_attempts_ = n;
        try {
            c.text = attempt(body);
            c.attempts = n;
            return c;
        } catch (const GatewayError& e) {
            if (!e.retryable() || n > cfg_.retry_cap) throw GatewayError(e.kind(), e.detail(), n);
            std::this_thread::sleep_for(backoff(n - 1));
        }
    }
}

}  // namespace vid2scenic::gateway
