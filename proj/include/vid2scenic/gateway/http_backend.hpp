#pragma once

#include <chrono>
#include <cstdint>
#include <atomic>
#include <mutex>
#include <string>

#include "vid2scenic/gateway/backend.hpp"

namespace vid2scenic::gateway {

struct HttpConfig {
    /// Full URL of the chat-completions resource, http:// or https://.
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string script_model = "gpt-4o";
    std::string feature_model = "gpt-4o";
    /// Name of the environment variable holding the bearer token.
    std::string credential_env = "OPENAI_API_KEY";
    double script_temperature = 0.2;
    double feature_temperature = 0.0;
    int retry_cap = 3;
    std::chrono::milliseconds deadline{60000};  // per attempt
    std::chrono::milliseconds backoff_base{500};
    int max_in_flight = 4;
    std::uint64_t jitter_seed = 0;
};

class CredentialError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The request body for one call: system message, then per example a user
/// message (label text + images in order) and an assistant message with its
/// payload, then the query message with frames, prior script and feedback.
/// Serialized with sorted keys, so equal inputs give equal bytes.
std::string build_request_body(const PromptPayload& payload, const std::string& model, double temperature);

/// Text of the first choice, or GatewayError (refusal / malformed_response).
std::string parse_completion_body(const std::string& body);

class HttpBackend : public CompletionBackend {
public:
    /// Reads the credential now; throws CredentialError when the variable is
    /// unset or empty, before any network traffic.
    explicit HttpBackend(HttpConfig cfg);

    Completion complete(const PromptPayload& payload) override;

    /// Attempts made by the most recent call on any thread (tests).
    int last_attempts() const { return last_attempts_; }

private:
    std::string attempt(const std::string& body);
    std::chrono::milliseconds backoff(int retry);

    HttpConfig cfg_;
    std::string token_;
    std::string scheme_host_port_;
    std::string path_;
    std::mutex rng_mu_;
    std::uint64_t rng_state_;
    std::atomic<int> last_attempts_{0};
};

}  // namespace vid2scenic::gateway
